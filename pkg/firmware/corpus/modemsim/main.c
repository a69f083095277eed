/* modemsim: narrowband modem registration state machine */
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#define FWSTR(name) static const char name[] __attribute__((section(".text.fwstr")))

#define BOOT_COOKIE 0x40DE4B07
#define EV_ATTACH 0xE7A00001
#define EV_GRANT 0xE7A00002
#define EV_DETACH 0xE7A00003
#define APN_DEFAULT 0xA9D0F417

FWSTR(msg_banner) = "modemsim radio stack initialized";
FWSTR(msg_search) = "searching for carrier beacon";
FWSTR(msg_online) = "registration granted, link online";
FWSTR(msg_offline) = "detached from network, radio idle";
FWSTR(msg_apn) = "default access point profile loaded";
FWSTR(msg_apn_set) = "access point profile stored";
FWSTR(msg_denied) = "event ignored in current state";
FWSTR(msg_unknown) = "modemsim: unsupported AT command";
FWSTR(msg_bye) = "modemsim radio stack shut down";
FWSTR(fmt_state) = "reg=%d apn=%d rssi=-%d\n";

static const int rssi_ramp[24] = {
    113, 111, 108, 104, 99, 95, 92, 90,
    89, 88, 87, 86, 85, 84, 83, 82,
    81, 80, 79, 78, 77, 76, 75, 74,
};

static void handle_event(int ev, int *reg, int *ticks) {
    if (ev == EV_ATTACH) {
        if (*reg == 0) {
            *reg = 1;
            printf("%s\n", msg_search);
        } else {
            printf("%s\n", msg_denied);
        }
    }
    if (ev == EV_GRANT) {
        if (*reg == 1) {
            *reg = 2;
            *ticks = 0;
            printf("%s\n", msg_online);
        } else {
            printf("%s\n", msg_denied);
        }
    }
    if (ev == EV_DETACH) {
        *reg = 0;
        printf("%s\n", msg_offline);
    }
}

static void load_apn(int profile, int *apn) {
    if (profile == APN_DEFAULT) {
        *apn = 1;
        printf("%s\n", msg_apn);
    }
    if (profile >= 2 && profile <= 8) {
        *apn = profile;
        printf("%s\n", msg_apn_set);
    }
}

int main(void) {
    static char line[96];
    int reg = 0;
    int apn = 0;
    int ticks = 0;
    int boot;
    setvbuf(stdout, NULL, _IONBF, 0);
    boot = BOOT_COOKIE;
    if (boot == BOOT_COOKIE) {
        printf("%s\n", msg_banner);
    }
    while (fgets(line, sizeof line, stdin)) {
        line[strcspn(line, "\n")] = 0;
        if (strcmp(line, "attach") == 0) {
            handle_event(EV_ATTACH, &reg, &ticks);
        } else if (strcmp(line, "grant") == 0) {
            handle_event(EV_GRANT, &reg, &ticks);
        } else if (strcmp(line, "detach") == 0) {
            handle_event(EV_DETACH, &reg, &ticks);
        } else if (strcmp(line, "apn") == 0) {
            load_apn(APN_DEFAULT, &apn);
        } else if (strncmp(line, "apn ", 4) == 0) {
            load_apn(atoi(line + 4), &apn);
        } else if (strcmp(line, "state") == 0) {
            printf(fmt_state, reg, apn, rssi_ramp[ticks % 24]);
            ticks++;
        } else if (strcmp(line, "quit") == 0) {
            break;
        } else {
            printf("%s\n", msg_unknown);
        }
    }
    printf("%s\n", msg_bye);
    return 0;
}
