/* fanpid: fan speed governor with integer step control */
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#define FWSTR(name) static const char name[] __attribute__((section(".text.fwstr")))

#define BOOT_COOKIE 0xFA4B0075
#define GOV_SILENT 0x60BE0001
#define GOV_TURBO 0x60BE0002
#define TARGET_AUTO 0x60BEA070
#define KICK_CODE 0x60BE4C4B

FWSTR(msg_banner) = "fanpid governor engaged, fans at idle";
FWSTR(msg_silent) = "governor profile: silent curve";
FWSTR(msg_turbo) = "governor profile: turbo curve";
FWSTR(msg_auto) = "target restored to automatic tracking";
FWSTR(msg_target) = "manual target accepted";
FWSTR(msg_kick) = "boost kick applied to break stall";
FWSTR(msg_step) = "governor stepped toward target";
FWSTR(msg_unknown) = "fanpid: no such control";
FWSTR(msg_bye) = "fanpid governor released";
FWSTR(fmt_state) = "rpm=%d target=%d profile=%d\n";

static void set_profile(int op, int *profile) {
    if (op == GOV_SILENT) {
        *profile = 1;
        printf("%s\n", msg_silent);
    }
    if (op == GOV_TURBO) {
        *profile = 2;
        printf("%s\n", msg_turbo);
    }
}

static void set_target(int raw, int *target) {
    if (raw == TARGET_AUTO) {
        *target = 1200;
        printf("%s\n", msg_auto);
    }
    if (raw >= 300 && raw <= 3000 && raw != TARGET_AUTO) {
        *target = raw;
        printf("%s\n", msg_target);
    }
}

static void kick(int code, int *rpm) {
    if (code == KICK_CODE) {
        *rpm = *rpm + 400;
        printf("%s\n", msg_kick);
    }
}

static void step(int *rpm, int target, int profile) {
    int gain = profile == 2 ? 200 : 50;
    if (*rpm < target) {
        *rpm = *rpm + gain;
        if (*rpm > target) {
            *rpm = target;
        }
    } else {
        *rpm = *rpm - gain;
        if (*rpm < target) {
            *rpm = target;
        }
    }
    printf("%s\n", msg_step);
}

int main(void) {
    static char line[96];
    int rpm = 600;
    int target = 1200;
    int profile = 1;
    int boot;
    setvbuf(stdout, NULL, _IONBF, 0);
    boot = BOOT_COOKIE;
    if (boot == BOOT_COOKIE) {
        printf("%s\n", msg_banner);
    }
    while (fgets(line, sizeof line, stdin)) {
        line[strcspn(line, "\n")] = 0;
        if (strcmp(line, "silent") == 0) {
            set_profile(GOV_SILENT, &profile);
        } else if (strcmp(line, "turbo") == 0) {
            set_profile(GOV_TURBO, &profile);
        } else if (strncmp(line, "tgt ", 4) == 0) {
            set_target(atoi(line + 4), &target);
        } else if (strcmp(line, "auto") == 0) {
            set_target(TARGET_AUTO, &target);
        } else if (strcmp(line, "kick") == 0) {
            kick(KICK_CODE, &rpm);
        } else if (strcmp(line, "step") == 0) {
            step(&rpm, target, profile);
        } else if (strcmp(line, "state") == 0) {
            printf(fmt_state, rpm, target, profile);
        } else if (strcmp(line, "quit") == 0) {
            break;
        } else {
            printf("%s\n", msg_unknown);
        }
    }
    printf("%s\n", msg_bye);
    return 0;
}
