#include <stdio.h>
#include "formring.h"

int main(void) {
    FrFormRing *fr = NULL;
    if (fr_form_ring_new("GF 2, trivial, lambda=-1", "max", false, &fr) != FR_STATUS_OK) {
        fprintf(stderr, "%s\n", fr_last_error());
        return 1;
    }
    FrGroup *eq = NULL;
    if (fr_eq_closure(fr, 2, 4000000, &eq) != FR_STATUS_OK) {
        fprintf(stderr, "%s\n", fr_last_error());
        fr_form_ring_free(fr);
        return 1;
    }
    printf("|EQ_4(F_2)| = %zu\n", (size_t)fr_group_order(eq));
    fr_group_free(eq);
    fr_form_ring_free(fr);
    return 0;
}
