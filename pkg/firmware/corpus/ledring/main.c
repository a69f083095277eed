/* ledring: addressable LED ring controller */
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#define FWSTR(name) static const char name[] __attribute__((section(".text.fwstr")))

#define BOOT_COOKIE 0x1ED51A7E
#define PAT_SOLID 0x50A70001
#define PAT_BLINK 0x50A70002
#define PAT_CHASE 0x50A70003
#define LEVEL_NIGHT 0x00D1A7ED

FWSTR(msg_banner) = "ledring driver online, 16 pixels mapped";
FWSTR(msg_solid) = "pattern: solid fill engaged";
FWSTR(msg_blink) = "pattern: blink cadence armed";
FWSTR(msg_chase) = "pattern: chase rotation armed";
FWSTR(msg_night) = "brightness clamped to night preset";
FWSTR(msg_level) = "brightness level accepted";
FWSTR(msg_pixels) = "pixel state dump follows";
FWSTR(msg_unknown) = "command not recognized";
FWSTR(msg_bye) = "ledring driver suspended";
FWSTR(fmt_pix) = "pix[%d]=%d\n";
FWSTR(fmt_level) = "level=%d pattern=%d\n";

static const int gamma_lut[32] = {
    0, 1, 2, 4, 6, 9, 12, 16,
    20, 25, 30, 36, 42, 49, 56, 64,
    72, 81, 90, 100, 110, 121, 132, 144,
    156, 169, 182, 196, 210, 225, 240, 255,
};

static int pixels[16];

static void apply_pattern(int op, int *pattern) {
    if (op == PAT_SOLID) {
        int i;
        for (i = 0; i < 16; i++) {
            pixels[i] = 255;
        }
        *pattern = 1;
        printf("%s\n", msg_solid);
    }
    if (op == PAT_BLINK) {
        int i;
        for (i = 0; i < 16; i++) {
            pixels[i] = (i & 1) ? 255 : 0;
        }
        *pattern = 2;
        printf("%s\n", msg_blink);
    }
    if (op == PAT_CHASE) {
        int i;
        for (i = 0; i < 16; i++) {
            pixels[i] = gamma_lut[(i * 2) & 31];
        }
        *pattern = 3;
        printf("%s\n", msg_chase);
    }
}

static void apply_level(int raw, int *level) {
    if (raw == LEVEL_NIGHT) {
        *level = 3;
        printf("%s\n", msg_night);
    }
    if (raw >= 0 && raw <= 31 && raw != LEVEL_NIGHT) {
        *level = raw;
        printf("%s\n", msg_level);
    }
}

int main(void) {
    static char line[96];
    int pattern = 0;
    int level = 16;
    int boot;
    setvbuf(stdout, NULL, _IONBF, 0);
    boot = BOOT_COOKIE;
    if (boot == BOOT_COOKIE) {
        printf("%s\n", msg_banner);
    }
    while (fgets(line, sizeof line, stdin)) {
        line[strcspn(line, "\n")] = 0;
        if (strcmp(line, "solid") == 0) {
            apply_pattern(PAT_SOLID, &pattern);
        } else if (strcmp(line, "blink") == 0) {
            apply_pattern(PAT_BLINK, &pattern);
        } else if (strcmp(line, "chase") == 0) {
            apply_pattern(PAT_CHASE, &pattern);
        } else if (strncmp(line, "dim ", 4) == 0) {
            apply_level(atoi(line + 4), &level);
        } else if (strcmp(line, "night") == 0) {
            apply_level(LEVEL_NIGHT, &level);
        } else if (strcmp(line, "show") == 0) {
            int i;
            printf("%s\n", msg_pixels);
            for (i = 0; i < 4; i++) {
                printf(fmt_pix, i, (pixels[i] * gamma_lut[level & 31]) / 255);
            }
        } else if (strcmp(line, "state") == 0) {
            printf(fmt_level, level, pattern);
        } else if (strcmp(line, "quit") == 0) {
            break;
        } else {
            printf("%s\n", msg_unknown);
        }
    }
    printf("%s\n", msg_bye);
    return 0;
}
