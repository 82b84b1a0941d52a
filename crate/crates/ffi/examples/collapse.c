/* Collapse of the P4 peak (0, 3, 0, 1) through the C interface. */
#include <stdio.h>

#include "sandpile.h"

int main(void) {
    SpGraph *g = NULL;
    if (sp_graph_path(4, &g) != SP_OK) {
        return 1;
    }
    double u0[4] = {0.0, 3.0, 0.0, 1.0};
    double u_inf[4];
    SpStatus s = sp_solve_collapse(g, SP_UNIFORM, u0, 4, 1e-4, u_inf, NULL);
    if (s != SP_OK) {
        char msg[256];
        sp_last_error_message(msg, sizeof msg);
        fprintf(stderr, "collapse failed: %s\n", msg);
        sp_graph_free(g);
        return 2;
    }
    printf("u_inf = (%.6f, %.6f, %.6f, %.6f)\n", u_inf[0], u_inf[1], u_inf[2], u_inf[3]);
    sp_graph_free(g);
    return 0;
}
