/* bootcfg: boot-time configuration store with commit protocol */
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#define FWSTR(name) static const char name[] __attribute__((section(".text.fwstr")))

#define BOOT_COOKIE 0xB007CF60
#define OP_COMMIT 0xCF600001
#define OP_WIPE 0xCF600002
#define SLOT_GOLDEN 0xCF60601D
#define DEFAULTS_CODE 0xCF60DEF0

FWSTR(msg_banner) = "bootcfg store mounted, staging empty";
FWSTR(msg_set) = "staged key updated";
FWSTR(msg_commit) = "staging committed to active slot";
FWSTR(msg_wiped) = "staging area discarded";
FWSTR(msg_golden) = "golden slot selected for next boot";
FWSTR(msg_slot) = "boot slot selected";
FWSTR(msg_defaults) = "factory defaults staged";
FWSTR(msg_unknown) = "bootcfg: no such operation";
FWSTR(msg_bye) = "bootcfg store unmounted";
FWSTR(fmt_get) = "cfg[%d]=%d\n";
FWSTR(fmt_state) = "slot=%d dirty=%d\n";
FWSTR(fmt_set_cmd) = "set %d %d";

static int staged[8];
static int active[8];

static void stage_key(int idx, int value, int *dirty) {
    staged[idx & 7] = value;
    *dirty = 1;
    printf("%s\n", msg_set);
}

static void apply_op(int op, int *dirty) {
    if (op == OP_COMMIT) {
        int i;
        for (i = 0; i < 8; i++) {
            active[i] = staged[i];
        }
        *dirty = 0;
        printf("%s\n", msg_commit);
    }
    if (op == OP_WIPE) {
        int i;
        if (*dirty == 0) {
            printf("%s\n", msg_wiped);
            return;
        }
        for (i = 0; i < 8; i++) {
            staged[i] = active[i];
        }
        *dirty = 0;
        printf("%s\n", msg_wiped);
    }
}

static void pick_slot(int raw, int *slot) {
    if (raw == SLOT_GOLDEN) {
        *slot = 9;
        printf("%s\n", msg_golden);
    }
    if (raw >= 0 && raw <= 3 && raw != SLOT_GOLDEN) {
        *slot = raw;
        printf("%s\n", msg_slot);
    }
}

static void stage_defaults(int code, int *dirty) {
    if (code == DEFAULTS_CODE) {
        int i;
        for (i = 0; i < 8; i++) {
            staged[i] = 100 + i;
        }
        *dirty = 1;
        printf("%s\n", msg_defaults);
    }
}

int main(void) {
    static char line[96];
    int dirty = 0;
    int slot = 0;
    int boot;
    setvbuf(stdout, NULL, _IONBF, 0);
    boot = BOOT_COOKIE;
    if (boot == BOOT_COOKIE) {
        printf("%s\n", msg_banner);
    }
    while (fgets(line, sizeof line, stdin)) {
        int k;
        int v;
        line[strcspn(line, "\n")] = 0;
        if (sscanf(line, fmt_set_cmd, &k, &v) == 2) {
            stage_key(k, v, &dirty);
        } else if (sscanf(line, "get %d", &k) == 1) {
            printf(fmt_get, k & 7, active[k & 7]);
        } else if (strcmp(line, "commit") == 0) {
            apply_op(OP_COMMIT, &dirty);
        } else if (strcmp(line, "revert") == 0) {
            apply_op(OP_WIPE, &dirty);
        } else if (strcmp(line, "golden") == 0) {
            pick_slot(SLOT_GOLDEN, &slot);
        } else if (sscanf(line, "slot %d", &k) == 1) {
            pick_slot(k, &slot);
        } else if (strcmp(line, "reset") == 0) {
            stage_defaults(DEFAULTS_CODE, &dirty);
        } else if (strcmp(line, "state") == 0) {
            printf(fmt_state, slot, dirty);
        } else if (strcmp(line, "quit") == 0) {
            break;
        } else {
            printf("%s\n", msg_unknown);
        }
    }
    printf("%s\n", msg_bye);
    return 0;
}
