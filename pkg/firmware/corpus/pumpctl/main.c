/* pumpctl: coolant pump controller with interlock */
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#define FWSTR(name) static const char name[] __attribute__((section(".text.fwstr")))

#define BOOT_COOKIE 0x70E4B007
#define OP_START 0x90D50001
#define OP_STOP 0x90D50002
#define SPEED_PURGE 0x90D5F1FF
#define INTERLOCK_CODE 0x0C0DE515

FWSTR(msg_banner) = "pumpctl supervisor ready, pump idle";
FWSTR(msg_started) = "pump spinning up to commanded speed";
FWSTR(msg_stopped) = "pump coasting down to standstill";
FWSTR(msg_purge) = "purge cycle: full speed for flush";
FWSTR(msg_speed) = "speed command accepted";
FWSTR(msg_interlock) = "interlock cleared by service code";
FWSTR(msg_blocked) = "interlock active, command refused";
FWSTR(msg_unknown) = "unsupported pump command";
FWSTR(msg_bye) = "pumpctl supervisor halted";
FWSTR(fmt_rpm) = "run=%d rpm=%d lock=%d\n";

static const int rpm_table[16] = {
    0, 450, 900, 1350, 1800, 2250, 2700, 3150,
    3600, 4050, 4500, 4950, 5400, 5850, 6300, 6750,
};

static void drive_pump(int op, int *running) {
    if (op == OP_START) {
        *running = 1;
        printf("%s\n", msg_started);
    }
    if (op == OP_STOP) {
        *running = 0;
        printf("%s\n", msg_stopped);
    }
}

static void command_speed(int raw, int *step) {
    if (raw == SPEED_PURGE) {
        *step = 15;
        printf("%s\n", msg_purge);
    }
    if (raw >= 0 && raw <= 15 && raw != SPEED_PURGE) {
        *step = raw;
        printf("%s\n", msg_speed);
    }
}

static void clear_interlock(int code, int *lock) {
    if (code == INTERLOCK_CODE) {
        *lock = 0;
        printf("%s\n", msg_interlock);
    }
}

int main(void) {
    static char line[96];
    int running = 0;
    int step = 0;
    int lock = 1;
    int boot;
    setvbuf(stdout, NULL, _IONBF, 0);
    boot = BOOT_COOKIE;
    if (boot == BOOT_COOKIE) {
        printf("%s\n", msg_banner);
    }
    while (fgets(line, sizeof line, stdin)) {
        line[strcspn(line, "\n")] = 0;
        if (strcmp(line, "start") == 0) {
            if (lock) {
                printf("%s\n", msg_blocked);
            } else {
                drive_pump(OP_START, &running);
            }
        } else if (strcmp(line, "stop") == 0) {
            drive_pump(OP_STOP, &running);
        } else if (strncmp(line, "speed ", 6) == 0) {
            command_speed(atoi(line + 6), &step);
        } else if (strcmp(line, "purge") == 0) {
            command_speed(SPEED_PURGE, &step);
        } else if (strncmp(line, "unlock ", 7) == 0) {
            clear_interlock((int)strtol(line + 7, NULL, 16), &lock);
        } else if (strcmp(line, "state") == 0) {
            printf(fmt_rpm, running, running ? rpm_table[step & 15] : 0, lock);
        } else if (strcmp(line, "quit") == 0) {
            break;
        } else {
            printf("%s\n", msg_unknown);
        }
    }
    printf("%s\n", msg_bye);
    return 0;
}
