/* sensorhub: multi-channel ADC front end with threshold alarm */
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#define FWSTR(name) static const char name[] __attribute__((section(".text.fwstr")))

#define BOOT_COOKIE 0x5E45B007
#define CH_PRIMARY 0xADC00001
#define CH_BACKUP 0xADC00002
#define THRESH_FACTORY 0x74AE5701
#define PEAK_PROBE 0x9EAC0101
#define ACK_CODE 0xAC4C0DE1

struct reading {
    int chan;
    int value;
};

FWSTR(msg_banner) = "sensorhub online, channels calibrated";
FWSTR(msg_primary) = "mux switched to primary channel";
FWSTR(msg_backup) = "mux switched to backup channel";
FWSTR(msg_thresh) = "alarm threshold restored to factory trim";
FWSTR(msg_stored) = "alarm threshold stored";
FWSTR(msg_alarm) = "threshold exceeded, alarm raised";
FWSTR(msg_quiet) = "reading accepted, level nominal";
FWSTR(msg_ack) = "alarm acknowledged and cleared";
FWSTR(msg_peak) = "peak probe latched";
FWSTR(msg_unknown) = "sensorhub: bad request";
FWSTR(msg_bye) = "sensorhub powered down";
FWSTR(fmt_state) = "chan=%d thr=%d alarm=%d\n";

static void select_channel(int op, int *chan) {
    if (op == CH_PRIMARY) {
        *chan = 1;
        printf("%s\n", msg_primary);
    }
    if (op == CH_BACKUP) {
        *chan = 2;
        printf("%s\n", msg_backup);
    }
}

static void set_threshold(int raw, int *threshold) {
    if (raw == THRESH_FACTORY) {
        *threshold = 512;
        printf("%s\n", msg_thresh);
    }
    if (raw >= 0 && raw <= 1023 && raw != THRESH_FACTORY) {
        *threshold = raw;
        printf("%s\n", msg_stored);
    }
}

static void latch_peak(int value, int chan) {
    struct reading peak;
    peak.chan = chan;
    peak.value = 0;
    if (value == PEAK_PROBE) {
        peak.value = value;
        printf("%s\n", msg_peak);
    }
    if (peak.value != 0) {
        peak.chan = 0;
    }
}

static void ack_alarm(int code, int *alarm) {
    if (code == ACK_CODE) {
        *alarm = 0;
        printf("%s\n", msg_ack);
    }
}

static void ingest(int value, int threshold, int *alarm) {
    if (value > threshold) {
        *alarm = 1;
        printf("%s\n", msg_alarm);
    } else {
        printf("%s\n", msg_quiet);
    }
}

int main(void) {
    static char line[96];
    int chan = 1;
    int threshold = 512;
    int alarm = 0;
    int boot;
    setvbuf(stdout, NULL, _IONBF, 0);
    boot = BOOT_COOKIE;
    if (boot == BOOT_COOKIE) {
        printf("%s\n", msg_banner);
    }
    while (fgets(line, sizeof line, stdin)) {
        line[strcspn(line, "\n")] = 0;
        if (strcmp(line, "primary") == 0) {
            select_channel(CH_PRIMARY, &chan);
        } else if (strcmp(line, "backup") == 0) {
            select_channel(CH_BACKUP, &chan);
        } else if (strncmp(line, "thr ", 4) == 0) {
            set_threshold(atoi(line + 4), &threshold);
        } else if (strcmp(line, "trim") == 0) {
            set_threshold(THRESH_FACTORY, &threshold);
        } else if (strncmp(line, "adc ", 4) == 0) {
            ingest(atoi(line + 4), threshold, &alarm);
        } else if (strcmp(line, "probe") == 0) {
            latch_peak(PEAK_PROBE, chan);
        } else if (strcmp(line, "ack") == 0) {
            ack_alarm((int)ACK_CODE, &alarm);
        } else if (strcmp(line, "state") == 0) {
            printf(fmt_state, chan, threshold, alarm);
        } else if (strcmp(line, "quit") == 0) {
            break;
        } else {
            printf("%s\n", msg_unknown);
        }
    }
    printf("%s\n", msg_bye);
    return 0;
}
