/* clbforge-protected: embedded integrity runtime. Do not edit or re-protect. */
#ifndef CLB_RUNTIME_DEFINED
#define CLB_RUNTIME_DEFINED
#include <fcntl.h>
#include <stdint.h>
#include <unistd.h>
#include <sys/mman.h>

static unsigned clb_fnv1a32(const unsigned char *data, unsigned len, unsigned h)
{
    unsigned i;
    for (i = 0u; i < len; i++) {
        h = (h ^ (unsigned)data[i]) * 0x01000193u;
    }
    return h;
}

/* Message is built on the stack so the runtime adds no string constants. */
static void clb_bomb(void)
{
    char m[19];
    long n;
    m[0] = 'T'; m[1] = 'A'; m[2] = 'M'; m[3] = 'P'; m[4] = 'E'; m[5] = 'R';
    m[6] = 'I'; m[7] = 'N'; m[8] = 'G'; m[9] = ' '; m[10] = 'D'; m[11] = 'E';
    m[12] = 'T'; m[13] = 'E'; m[14] = 'C'; m[15] = 'T'; m[16] = 'E'; m[17] = 'D';
    m[18] = '\n';
    n = (long)write(2, m, sizeof(m));
    (void)n;
    _exit(42);
}

static unsigned clb_hash(unsigned x, unsigned salt)
{
    unsigned char buf[8];
    buf[0] = (unsigned char)(salt & 0xffu);
    buf[1] = (unsigned char)((salt >> 8) & 0xffu);
    buf[2] = (unsigned char)((salt >> 16) & 0xffu);
    buf[3] = (unsigned char)((salt >> 24) & 0xffu);
    buf[4] = (unsigned char)(x & 0xffu);
    buf[5] = (unsigned char)((x >> 8) & 0xffu);
    buf[6] = (unsigned char)((x >> 16) & 0xffu);
    buf[7] = (unsigned char)((x >> 24) & 0xffu);
    return clb_fnv1a32(buf, 8u, 0x811c9dc5u);
}

static void clb_decrypt(void *fun, unsigned *key, unsigned len)
{
    long page = sysconf(_SC_PAGESIZE);
    uintptr_t start = (uintptr_t)fun;
    uintptr_t base;
    unsigned char kb[4];
    unsigned char *p;
    unsigned i;
    unsigned k;
    if (len == 0u) {
        return;
    }
    if (page <= 0) {
        clb_bomb();
    }
    base = start & ~((uintptr_t)page - 1u);
    k = *key;
    kb[0] = (unsigned char)(k & 0xffu);
    kb[1] = (unsigned char)((k >> 8) & 0xffu);
    kb[2] = (unsigned char)((k >> 16) & 0xffu);
    kb[3] = (unsigned char)((k >> 24) & 0xffu);
    if (mprotect((void *)base, (size_t)(start + len - base),
                 PROT_READ | PROT_WRITE | PROT_EXEC) != 0) {
        clb_bomb();
    }
    p = (unsigned char *)start;
    for (i = 0u; i < len; i++) {
        p[i] ^= kb[i & 3u];
    }
    if (mprotect((void *)base, (size_t)(start + len - base),
                 PROT_READ | PROT_EXEC) != 0) {
        clb_bomb();
    }
    __builtin___clear_cache((char *)start, (char *)(start + len));
}

/* Path is built on the stack for the same reason as the bomb message. */
static void clb_at_check(unsigned offset, unsigned count, unsigned control)
{
    unsigned char buf[256];
    char path[15];
    unsigned h = 0x811c9dc5u;
    unsigned remaining = count;
    int fd;
    path[0] = '/'; path[1] = 'p'; path[2] = 'r'; path[3] = 'o'; path[4] = 'c';
    path[5] = '/'; path[6] = 's'; path[7] = 'e'; path[8] = 'l'; path[9] = 'f';
    path[10] = '/'; path[11] = 'e'; path[12] = 'x'; path[13] = 'e';
    path[14] = '\0';
    fd = open(path, O_RDONLY);
    if (fd < 0) {
        clb_bomb();
    }
    if (lseek(fd, (off_t)offset, SEEK_SET) == (off_t)-1) {
        clb_bomb();
    }
    while (remaining > 0u) {
        unsigned want = remaining > (unsigned)sizeof(buf) ? (unsigned)sizeof(buf) : remaining;
        long got = (long)read(fd, buf, (size_t)want);
        if (got <= 0) {
            clb_bomb();
        }
        h = clb_fnv1a32(buf, (unsigned)got, h);
        remaining -= (unsigned)got;
    }
    close(fd);
    if (h != control) {
        clb_bomb();
    }
}
#endif /* CLB_RUNTIME_DEFINED */
