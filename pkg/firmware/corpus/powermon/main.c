/* powermon: supply rail monitor with trip latch */
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#define FWSTR(name) static const char name[] __attribute__((section(".text.fwstr")))

#define BOOT_COOKIE 0x9043B007
#define RAIL_MAIN 0x4A110001
#define RAIL_AUX 0x4A110002
#define TRIP_RESET 0x4A11C1EA
#define LIMIT_STOCK 0x4A11D0C4

FWSTR(msg_banner) = "powermon sampling rails, trip latch clear";
FWSTR(msg_main) = "monitoring main rail";
FWSTR(msg_aux) = "monitoring auxiliary rail";
FWSTR(msg_limit) = "current limit restored to stock value";
FWSTR(msg_limit_set) = "current limit updated";
FWSTR(msg_trip) = "overcurrent! trip latch set";
FWSTR(msg_ok) = "sample within limits";
FWSTR(msg_reset) = "trip latch cleared by reset code";
FWSTR(msg_unknown) = "powermon: invalid request";
FWSTR(msg_bye) = "powermon sampling stopped";
FWSTR(fmt_state) = "rail=%d limit=%d trip=%d\n";

static const int shunt_cal[20] = {
    996, 997, 998, 999, 1000, 1001, 1002, 1003,
    1004, 1005, 1004, 1003, 1002, 1001, 1000, 999,
    998, 997, 996, 995,
};

static void pick_rail(int op, int *rail) {
    if (op == RAIL_MAIN) {
        *rail = 1;
        printf("%s\n", msg_main);
    }
    if (op == RAIL_AUX) {
        *rail = 2;
        printf("%s\n", msg_aux);
    }
}

static void set_limit(int raw, int *limit) {
    if (raw == LIMIT_STOCK) {
        *limit = 2000;
        printf("%s\n", msg_limit);
    }
    if (raw >= 100 && raw <= 5000 && raw != LIMIT_STOCK) {
        *limit = raw;
        printf("%s\n", msg_limit_set);
    }
}

static void sample(int milliamps, int limit, int *trip, int tick) {
    int calibrated = (milliamps * shunt_cal[tick % 20]) / 1000;
    if (calibrated > limit) {
        *trip = 1;
        printf("%s\n", msg_trip);
    } else {
        printf("%s\n", msg_ok);
    }
}

static void reset_trip(int code, int *trip) {
    if (code == TRIP_RESET) {
        *trip = 0;
        printf("%s\n", msg_reset);
    }
}

int main(void) {
    static char line[96];
    int rail = 1;
    int limit = 2000;
    int trip = 0;
    int tick = 0;
    int boot;
    setvbuf(stdout, NULL, _IONBF, 0);
    boot = BOOT_COOKIE;
    if (boot == BOOT_COOKIE) {
        printf("%s\n", msg_banner);
    }
    while (fgets(line, sizeof line, stdin)) {
        line[strcspn(line, "\n")] = 0;
        if (strcmp(line, "main") == 0) {
            pick_rail(RAIL_MAIN, &rail);
        } else if (strcmp(line, "aux") == 0) {
            pick_rail(RAIL_AUX, &rail);
        } else if (strncmp(line, "limit ", 6) == 0) {
            set_limit(atoi(line + 6), &limit);
        } else if (strcmp(line, "stock") == 0) {
            set_limit(LIMIT_STOCK, &limit);
        } else if (strncmp(line, "ma ", 3) == 0) {
            sample(atoi(line + 3), limit, &trip, tick);
            tick++;
        } else if (strcmp(line, "reset") == 0) {
            reset_trip(TRIP_RESET, &trip);
        } else if (strcmp(line, "state") == 0) {
            printf(fmt_state, rail, limit, trip);
        } else if (strcmp(line, "quit") == 0) {
            break;
        } else {
            printf("%s\n", msg_unknown);
        }
    }
    printf("%s\n", msg_bye);
    return 0;
}
