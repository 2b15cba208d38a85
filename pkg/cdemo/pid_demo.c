/* pid_demo - minimal host consuming the PID controller shared library.
 *
 * Loads the library with the platform dynamic loader, resolves every
 * exported symbol by name, then runs a short control sequence: two
 * updates at the default gain, a bumpless gain change to zero, and three
 * more updates.  Each returned control value is printed on its own line.
 *
 * Usage: pid_demo [path/to/libpidcontrol.so]
 *
 * Exit codes: 0 success, 1 library load failure, 2 missing symbol,
 * 3 initialization failure.
 *
 * Note the RTLD_GLOBAL flag: the library embeds a language runtime whose
 * extension modules resolve symbols from the global namespace (see
 * pid_controller.h).
 */
#include <dlfcn.h>
#include <stdio.h>

#ifndef DEFAULT_LIB_PATH
#define DEFAULT_LIB_PATH "../build/lib/libpidcontrol.so"
#endif

typedef int (*pid_init_t)(void);
typedef double (*calc_ctrl_t)(double, double, double);
typedef void (*set_K_t)(double, double, double);
typedef void (*set_time_t)(double);
typedef void (*reset_state_t)(void);
typedef int (*last_error_t)(void);

static void *resolve(void *handle, const char *name, int *missing)
{
    void *sym = dlsym(handle, name);
    if (!sym) {
        fprintf(stderr, "missing symbol: %s\n", name);
        *missing = 1;
    }
    return sym;
}

int main(int argc, char **argv)
{
    const char *lib_path = argc > 1 ? argv[1] : DEFAULT_LIB_PATH;

    void *lib_handle = dlopen(lib_path, RTLD_NOW | RTLD_GLOBAL);
    if (!lib_handle) {
        fprintf(stderr, "failed to load %s: %s\n", lib_path, dlerror());
        return 1;
    }

    int missing = 0;
    pid_init_t pid_init = (pid_init_t)resolve(lib_handle, "pid_init", &missing);
    calc_ctrl_t calc_ctrl = (calc_ctrl_t)resolve(lib_handle, "calculate_control", &missing);
    set_K_t set_K = (set_K_t)resolve(lib_handle, "set_K", &missing);
    set_time_t set_Ti = (set_time_t)resolve(lib_handle, "set_Ti", &missing);
    set_time_t set_Td = (set_time_t)resolve(lib_handle, "set_Td", &missing);
    reset_state_t reset_state = (reset_state_t)resolve(lib_handle, "reset_state", &missing);
    last_error_t pid_last_error = (last_error_t)resolve(lib_handle, "pid_last_error", &missing);
    if (missing)
        return 2;
    (void)set_Ti;
    (void)set_Td;
    (void)reset_state;

    if (pid_init() != 0) {
        fprintf(stderr, "pid_init failed\n");
        return 3;
    }

    /* Trivial program computing controller outputs and modifying K. */
    double r = 1.0, y = 0.0, uff = 0.0;
    double result = calc_ctrl(r, y, uff);
    printf("calc_ctrl returned: %.6f\n", result);
    result = calc_ctrl(r, y, uff);
    printf("calc_ctrl returned: %.6f\n", result);
    set_K(0.0, r, y);
    for (int i = 0; i < 3; ++i) {
        result = calc_ctrl(r, y, uff);
        printf("calc_ctrl returned: %.6f\n", result);
    }

    if (pid_last_error() != 0) {
        fprintf(stderr, "controller reported an error\n");
        return 3;
    }
    return 0;
}
