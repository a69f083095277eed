"""Whole-pipeline test against the host C compiler.

Covers the contract the desk-scale corpus relies on: a protected binary is
byte-equivalent on stdout, every digest verifies, and flipping a byte inside
the startup bomb's region kills the tampered binary before any output.
"""

import shutil
import textwrap

import pytest

from clbforge.config import Config
from clbforge.elf import load_image
from clbforge.harness import (
    CLASS_STARTUP,
    build,
    classify_detection,
    evaluate,
    parse_script,
    protect_tree,
    run_with_script,
)
from clbforge.patcher import run_pipeline, verify
from clbforge.transformer import Keymap

pytestmark = pytest.mark.skipif(shutil.which("cc") is None, reason="no C compiler")

DEMO = textwrap.dedent("""\
    #include <stdio.h>

    #define OP_STATUS 0x53544154
    #define BOOT_KEY 0x0B007541

    static const char banner[] __attribute__((section(".text.fwstr"))) =
        "demo firmware ready";

    static void report_status(int code) {
        if (code == OP_STATUS) {
            printf("status ok %d\\n", code);
        }
    }

    int main(void) {
        int boot;
        char cmd[64];
        setvbuf(stdout, NULL, _IONBF, 0);
        boot = BOOT_KEY;
        if (boot == BOOT_KEY) {
            printf("%s\\n", banner);
        }
        while (fgets(cmd, sizeof cmd, stdin)) {
            if (cmd[0] == 's') {
                report_status(OP_STATUS);
            } else if (cmd[0] == 'q') {
                break;
            }
        }
        printf("bye\\n");
        return 0;
    }
""")

SCRIPT = textwrap.dedent("""\
    EXPECT demo firmware ready
    SEND status
    EXPECT status ok
    SEND status
    EXPECT status ok
    SEND quit
    EXPECT bye
""")


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    root = tmp_path_factory.mktemp("e2e")
    cfg = Config(seed=1234)
    src = root / "src"
    src.mkdir()
    (src / "main.c").write_text(DEMO)
    script = root / "input.script"
    script.write_text(SCRIPT)

    protect_tree(src, root / "protected_src", root / "keymap.json", cfg)
    original = build(src, root / "original", cfg)
    unpatched = build(root / "protected_src", root / "unpatched", cfg)

    keymap = Keymap.load(root / "keymap.json")
    image = load_image(unpatched.read_bytes())
    patched_image, report = run_pipeline(image, keymap, cfg.min_region_bytes)
    protected = root / "protected"
    protected.write_bytes(patched_image.data)
    protected.chmod(0o755)
    return {
        "cfg": cfg,
        "root": root,
        "script": script,
        "original": original,
        "protected": protected,
        "keymap": keymap,
        "image": patched_image,
        "report": report,
    }


def test_symbols_survive_compilation(pipeline):
    image = load_image(pipeline["protected"].read_bytes())
    names = {s.name for s in image.symbols}
    assert "__clb_ext_0_report_status" in names
    assert "__clb_ext_1_main" in names


def test_patch_verifies(pipeline):
    result = verify(pipeline["image"], pipeline["keymap"])
    assert result.all_ok, [e.detail for e in result.entries]


def test_functional_equivalence(pipeline):
    report = evaluate(pipeline["original"], pipeline["protected"], None,
                      pipeline["script"], pipeline["cfg"], program="demo",
                      clb_count=len(pipeline["keymap"].records),
                      coverage=pipeline["report"].coverage)
    assert report.equivalence == "identical"
    assert report.clb_count == 2


def test_startup_bomb_guards_the_banner(pipeline):
    report = pipeline["report"]
    data = pipeline["protected"].read_bytes()
    banner_off = data.find(b"demo firmware ready")
    assert banner_off != -1
    startup = next(e for e in report.entries if e.record.ext_symbol == "__clb_ext_1_main")
    assert startup.direction == "backward"
    assert startup.region.offset <= banner_off < startup.region.offset + startup.region.count


def test_tampered_banner_detected_at_startup(pipeline):
    data = bytearray(pipeline["protected"].read_bytes())
    off = data.find(b"demo firmware ready")
    data[off] ^= 0xFF
    tampered = pipeline["root"] / "tampered"
    tampered.write_bytes(bytes(data))
    tampered.chmod(0o755)
    result = run_with_script(tampered, parse_script(SCRIPT), timeout=10)
    assert result.status == 42
    assert b"TAMPERING DETECTED" in result.stderr
    assert result.stdout == b""
    assert classify_detection(result, pipeline["cfg"]) == CLASS_STARTUP


def test_flip_outside_regions_stays_undetected(pipeline):
    image = pipeline["image"]
    comment = image.section_by_name(".comment")
    if comment is None:
        pytest.skip("compiler emitted no .comment section")
    regions = [(e.region.offset, e.region.offset + e.region.count)
               for e in pipeline["report"].entries]
    assert not any(a <= comment.offset < b for a, b in regions)
    data = bytearray(pipeline["protected"].read_bytes())
    data[comment.offset] ^= 0xFF
    tampered = pipeline["root"] / "tampered_inert"
    tampered.write_bytes(bytes(data))
    tampered.chmod(0o755)
    result = run_with_script(tampered, parse_script(SCRIPT), timeout=10)
    assert result.status == 0
    assert result.script_completed
    assert classify_detection(result, pipeline["cfg"]) == "undetected"


def test_stripped_patched_binary_still_runs(pipeline):
    import subprocess
    stripped = pipeline["root"] / "stripped"
    shutil.copy(pipeline["protected"], stripped)
    if shutil.which("strip") is None:
        pytest.skip("no strip")
    subprocess.run(["strip", str(stripped)], check=True)
    result = run_with_script(stripped, parse_script(SCRIPT), timeout=10)
    assert result.status == 0
    assert result.script_completed


def test_unpatched_protected_binary_fails_closed(pipeline, tmp_path):
    # placeholders still hold magics: the first triggered bomb must take the
    # detection exit, never run garbage silently
    unpatched = pipeline["root"] / "unpatched"
    result = run_with_script(unpatched, parse_script(SCRIPT), timeout=10)
    assert result.status == 42
    assert b"TAMPERING DETECTED" in result.stderr


def test_detected_during_input(tmp_path):
    # a flip inside the ping bomb's forward region, placed in never-executed
    # filler code so nothing crashes before the bomb fires mid-run
    src = tmp_path / "src"
    src.mkdir()
    (src / "main.c").write_text(textwrap.dedent("""\
        #include <stdio.h>

        #define BOOT_KEY 0x0B007542
        #define OP_PING 0x50494E47

        static const char banner2[] __attribute__((section(".text.fwstr"))) =
            "demo2 ready with a text tail";

        __attribute__((used)) void dead_filler(void) {
            volatile int sink = 0;
            int i;
            for (i = 0; i < 64; i++) {
                sink += i * i;
            }
        }

        static void do_ping(int op, int *count) {
            if (op == OP_PING) {
                *count = *count + 1;
                printf("pong %d\\n", *count);
            }
        }

        int main(void) {
            int boot;
            int count = 0;
            char line[64];
            setvbuf(stdout, NULL, _IONBF, 0);
            boot = BOOT_KEY;
            if (boot == BOOT_KEY) {
                printf("%s\\n", banner2);
            }
            while (fgets(line, sizeof line, stdin)) {
                if (line[0] == 'p') {
                    do_ping(OP_PING, &count);
                } else if (line[0] == 'q') {
                    break;
                }
            }
            printf("bye\\n");
            return 0;
        }
    """))
    cfg = Config(seed=55)
    protect_tree(src, tmp_path / "out", tmp_path / "km.json", cfg)
    unpatched = build(tmp_path / "out", tmp_path / "unpatched", cfg)
    keymap = Keymap.load(tmp_path / "km.json")
    patched, report = run_pipeline(load_image(unpatched.read_bytes()), keymap)

    ping = next(e for e in report.entries if "do_ping" in e.record.ext_symbol)
    boot = next(e for e in report.entries if "main" in e.record.ext_symbol)
    filler = load_image(patched.data).symbols_named("dead_filler")[0]
    image = load_image(patched.data)
    filler_off = image.addr_to_offset(filler.value, image.text)
    target = filler_off + 8
    assert ping.region.offset <= target < ping.region.offset + ping.region.count
    assert not (boot.region.offset <= target < boot.region.offset + boot.region.count)

    data = bytearray(patched.data)
    data[target] ^= 0xFF
    exe = tmp_path / "tampered"
    exe.write_bytes(bytes(data))
    exe.chmod(0o755)
    script = parse_script("EXPECT demo2 ready\nSEND ping\nEXPECT pong 1\n")
    result = run_with_script(exe, script, timeout=10)
    assert result.status == 42
    assert b"TAMPERING DETECTED" in result.stderr
    assert b"demo2 ready" in result.stdout  # startup check passed first
    assert result.consumed_inputs == 1
    assert classify_detection(result, cfg) == "detected-during-input"


def test_two_file_program_links_and_runs(tmp_path):
    # each protected file carries its own static helper copy; the second file
    # also hosts a bomb keyed off a file-scope variable
    src = tmp_path / "src"
    src.mkdir()
    (src / "engine.c").write_text(textwrap.dedent("""\
        #include <stdio.h>

        #define GEAR_TOP 0x6EA40003

        int engine_gear = 0;

        void shift_to(int gear) {
            engine_gear = gear;
            if (engine_gear == GEAR_TOP) {
                printf("overdrive engaged\\n");
            }
        }
    """))
    (src / "main.c").write_text(textwrap.dedent("""\
        #include <stdio.h>

        #define BOOT_KEY 0x0B007543

        static const char banner3[] __attribute__((section(".text.fwstr"))) =
            "twofile controller ready";

        void shift_to(int gear);

        int main(void) {
            int boot;
            setvbuf(stdout, NULL, _IONBF, 0);
            boot = BOOT_KEY;
            if (boot == BOOT_KEY) {
                printf("%s\\n", banner3);
            }
            shift_to(1);
            shift_to(0x6EA40003);
            printf("done\\n");
            return 0;
        }
    """))
    cfg = Config(seed=91)
    result = protect_tree(src, tmp_path / "out", tmp_path / "km.json", cfg)
    assert [r.file for r in result.keymap.records] == ["engine.c", "main.c"]
    for rel in ("engine.c", "main.c"):
        assert (tmp_path / "out" / rel).read_bytes().count(b"static unsigned clb_hash") == 1

    original = build(src, tmp_path / "original", cfg)
    unpatched = build(tmp_path / "out", tmp_path / "unpatched", cfg)
    keymap = Keymap.load(tmp_path / "km.json")
    patched, report = run_pipeline(load_image(unpatched.read_bytes()), keymap)
    assert len(report.entries) == 2
    exe = tmp_path / "protected"
    exe.write_bytes(patched.data)
    exe.chmod(0o755)
    assert verify(patched, keymap).all_ok

    script = parse_script("EXPECT twofile controller ready\nEXPECT overdrive engaged\nEXPECT done\n")
    run_orig = run_with_script(original, script, timeout=10)
    run_prot = run_with_script(exe, script, timeout=10)
    assert run_orig.status == run_prot.status == 0
    assert run_orig.stdout == run_prot.stdout


def test_qualified_free_variable_round_trip(tmp_path):
    src = tmp_path / "src"
    src.mkdir()
    (src / "main.c").write_text(textwrap.dedent("""\
        #include <stdio.h>
        void show(int tag, const char *label) {
            if (tag == 0x4C4B1D01) {
                printf("%s\\n", label);
            }
        }
        int main(void) {
            setvbuf(stdout, NULL, _IONBF, 0);
            show(0x4C4B1D01, "const label works");
            return 0;
        }
    """))
    cfg = Config(seed=8)
    protect_tree(src, tmp_path / "out", tmp_path / "km.json", cfg)
    protected_src = (tmp_path / "out" / "main.c").read_text()
    assert "const char * *__clb_p_label" in protected_src
    assert "(*__clb_p_label)" in protected_src
    unpatched = build(tmp_path / "out", tmp_path / "unpatched", cfg)
    keymap = Keymap.load(tmp_path / "km.json")
    patched, _ = run_pipeline(load_image(unpatched.read_bytes()), keymap)
    exe = tmp_path / "prog"
    exe.write_bytes(patched.data)
    exe.chmod(0o755)
    result = run_with_script(exe, parse_script("EXPECT const label works\n"), timeout=10)
    assert result.status == 0
    assert result.stdout == b"const label works\n"
