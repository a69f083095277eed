/* doorlock: electronic latch with pin entry and arming */
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#define FWSTR(name) static const char name[] __attribute__((section(".text.fwstr")))

#define BOOT_COOKIE 0x10CCED42
#define MASTER_PIN 12648430
#define OP_RELOCK 0x5EA10001
#define OP_ARM 0x5EA10002
#define TAMPER_LIMIT 3

FWSTR(msg_banner) = "doorlock controller armed and latched";
FWSTR(msg_open) = "latch released, door open";
FWSTR(msg_denied) = "pin rejected, attempt logged";
FWSTR(msg_relock) = "latch engaged, door secured";
FWSTR(msg_armed) = "perimeter alarm armed";
FWSTR(msg_lockout) = "too many attempts, lockout engaged";
FWSTR(msg_unknown) = "command not understood";
FWSTR(msg_bye) = "doorlock controller sleeping";
FWSTR(fmt_state) = "locked=%d armed=%d attempts=%d\n";

static void check_pin(int pin, int *locked, int *attempts) {
    if (pin == MASTER_PIN) {
        *locked = 0;
        *attempts = 0;
        printf("%s\n", msg_open);
    }
    if (pin != MASTER_PIN) {
        *attempts = *attempts + 1;
        printf("%s\n", msg_denied);
    }
}

static void watch_attempts(int count, int *armed) {
    if (count == TAMPER_LIMIT) {
        *armed = 2;
        printf("%s\n", msg_lockout);
    }
}

static void apply_op(int op, int *locked, int *armed) {
    if (op == OP_RELOCK) {
        *locked = 1;
        printf("%s\n", msg_relock);
    }
    if (op == OP_ARM) {
        *armed = 1;
        printf("%s\n", msg_armed);
    }
}

int main(void) {
    static char line[96];
    int locked = 1;
    int armed = 0;
    int attempts = 0;
    int boot;
    setvbuf(stdout, NULL, _IONBF, 0);
    boot = BOOT_COOKIE;
    if (boot == BOOT_COOKIE) {
        printf("%s\n", msg_banner);
    }
    while (fgets(line, sizeof line, stdin)) {
        line[strcspn(line, "\n")] = 0;
        if (strncmp(line, "pin ", 4) == 0) {
            check_pin(atoi(line + 4), &locked, &attempts);
            watch_attempts(attempts, &armed);
        } else if (strcmp(line, "relock") == 0) {
            apply_op(OP_RELOCK, &locked, &armed);
        } else if (strcmp(line, "arm") == 0) {
            apply_op(OP_ARM, &locked, &armed);
        } else if (strcmp(line, "state") == 0) {
            printf(fmt_state, locked, armed, attempts);
        } else if (strcmp(line, "quit") == 0) {
            break;
        } else {
            printf("%s\n", msg_unknown);
        }
    }
    printf("%s\n", msg_bye);
    return 0;
}
