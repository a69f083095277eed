/* thermo: temperature controller front panel */
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#define FWSTR(name) static const char name[] __attribute__((section(".text.fwstr")))

#define BOOT_COOKIE 0x7E401A2B
#define OP_MODE_OFF 0x4D0D0001
#define OP_MODE_HEAT 0x4D0D0002
#define OP_MODE_COOL 0x4D0D0003
#define SETPOINT_FACTORY 0x5E7B0A11

FWSTR(msg_banner) = "thermo controller ready (fw 1.4.2)";
FWSTR(msg_mode_off) = "mode switched to standby";
FWSTR(msg_mode_heat) = "mode switched to heating";
FWSTR(msg_mode_cool) = "mode switched to cooling";
FWSTR(msg_setpoint) = "setpoint stored";
FWSTR(msg_defaults) = "setpoint reset to factory default";
FWSTR(msg_range) = "setpoint out of range";
FWSTR(msg_status) = "status report";
FWSTR(msg_unknown) = "unknown command ignored";
FWSTR(msg_bye) = "thermo controller halted";
FWSTR(fmt_status) = "%s: mode=%d set=%d temp=%d\n";

static const int temp_curve[32] = {
    201, 203, 206, 209, 212, 214, 215, 215,
    214, 212, 209, 205, 202, 199, 197, 196,
    196, 197, 199, 202, 205, 208, 210, 211,
    211, 210, 208, 206, 204, 202, 201, 200,
};

static int simulated_temp(int tick) {
    return temp_curve[tick & 31] / 10;
}

static void set_mode(int op, int *mode) {
    if (op == OP_MODE_OFF) {
        *mode = 0;
        printf("%s\n", msg_mode_off);
    }
    if (op == OP_MODE_HEAT) {
        *mode = 1;
        printf("%s\n", msg_mode_heat);
    }
    if (op == OP_MODE_COOL) {
        *mode = 2;
        printf("%s\n", msg_mode_cool);
    }
}

static void store_setpoint(int raw, int *setpoint) {
    if (raw == SETPOINT_FACTORY) {
        *setpoint = 21;
        printf("%s\n", msg_defaults);
    }
    if (raw != SETPOINT_FACTORY) {
        if (raw < 5 || raw > 35) {
            printf("%s\n", msg_range);
        } else {
            *setpoint = raw;
            printf("%s\n", msg_setpoint);
        }
    }
}

int main(void) {
    static char line[96];
    int mode = 0;
    int setpoint = 21;
    int tick = 0;
    int boot;
    setvbuf(stdout, NULL, _IONBF, 0);
    boot = BOOT_COOKIE;
    if (boot == BOOT_COOKIE) {
        printf("%s\n", msg_banner);
    }
    while (fgets(line, sizeof line, stdin)) {
        line[strcspn(line, "\n")] = 0;
        if (strncmp(line, "mode ", 5) == 0) {
            if (strcmp(line + 5, "off") == 0) {
                set_mode(OP_MODE_OFF, &mode);
            } else if (strcmp(line + 5, "heat") == 0) {
                set_mode(OP_MODE_HEAT, &mode);
            } else if (strcmp(line + 5, "cool") == 0) {
                set_mode(OP_MODE_COOL, &mode);
            }
        } else if (strncmp(line, "set ", 4) == 0) {
            store_setpoint(atoi(line + 4), &setpoint);
        } else if (strcmp(line, "reset") == 0) {
            store_setpoint(SETPOINT_FACTORY, &setpoint);
        } else if (strcmp(line, "status") == 0) {
            printf(fmt_status, msg_status, mode, setpoint, simulated_temp(tick));
        } else if (strcmp(line, "quit") == 0) {
            break;
        } else {
            printf("%s\n", msg_unknown);
        }
        tick++;
    }
    printf("%s\n", msg_bye);
    return 0;
}
