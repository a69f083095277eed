/* datalogger: ring-buffered sample recorder with marks */
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#define FWSTR(name) static const char name[] __attribute__((section(".text.fwstr")))

#define BOOT_COOKIE 0xDA7A1066
#define OP_MARK 0x3A4B0001
#define OP_WIPE 0x3A4B0002
#define MARK_MAGIC 0x3A4BFACE

FWSTR(msg_banner) = "datalogger ready, ring buffer empty";
FWSTR(msg_rec) = "sample recorded";
FWSTR(msg_mark) = "mark sentinel recorded";
FWSTR(msg_wipe) = "ring buffer wiped clean";
FWSTR(msg_dump) = "ring buffer dump begins";
FWSTR(msg_end) = "ring buffer dump complete";
FWSTR(msg_unknown) = "datalogger: unknown verb";
FWSTR(msg_bye) = "datalogger flushed and stopped";
FWSTR(fmt_slot) = "slot[%d]=%d\n";
FWSTR(fmt_count) = "count=%d\n";

static int ring[32];
static int ring_len = 0;

static void push_sample(int v) {
    ring[ring_len & 31] = v;
    ring_len++;
}

static void handle_op(int op, int *marks) {
    if (op == OP_MARK) {
        push_sample(MARK_MAGIC);
        *marks = *marks + 1;
        printf("%s\n", msg_mark);
    }
    if (op == OP_WIPE) {
        int i;
        for (i = 0; i < 32; i++) {
            ring[i] = 0;
        }
        ring_len = 0;
        printf("%s\n", msg_wipe);
    }
}

static void dump_ring(int limit) {
    int i;
    int n = ring_len < limit ? ring_len : limit;
    printf("%s\n", msg_dump);
    for (i = 0; i < n; i++) {
        printf(fmt_slot, i, ring[i]);
    }
    printf("%s\n", msg_end);
}

int main(void) {
    static char line[96];
    int marks = 0;
    int boot;
    setvbuf(stdout, NULL, _IONBF, 0);
    boot = BOOT_COOKIE;
    if (boot == BOOT_COOKIE) {
        printf("%s\n", msg_banner);
    }
    while (fgets(line, sizeof line, stdin)) {
        line[strcspn(line, "\n")] = 0;
        if (strncmp(line, "rec ", 4) == 0) {
            push_sample(atoi(line + 4));
            printf("%s\n", msg_rec);
        } else if (strcmp(line, "mark") == 0) {
            handle_op(OP_MARK, &marks);
        } else if (strcmp(line, "wipe") == 0) {
            handle_op(OP_WIPE, &marks);
        } else if (strcmp(line, "dump") == 0) {
            dump_ring(8);
        } else if (strcmp(line, "count") == 0) {
            printf(fmt_count, ring_len);
        } else if (strcmp(line, "quit") == 0) {
            break;
        } else {
            printf("%s\n", msg_unknown);
        }
    }
    printf("%s\n", msg_bye);
    return 0;
}
