/* Build from the workspace root:
 *   cargo build --release -p elswap-ffi
 *   cc crates/ffi/examples/price.c -Icrates/ffi/include \
 *      target/release/libelswap_ffi.a -lpthread -ldl -lm -o price
 */
#include <stdio.h>

#include "elswap.h"

int main(void) {
    ElswapModel *model = NULL;
    if (elswap_model_from_json("{\"model\": {\"type\": \"samuelson\", \"lambda\": 3.5}}", &model) != ELSWAP_STATUS_OK) {
        fprintf(stderr, "model: %s\n", elswap_last_error());
        return 1;
    }
    ElswapPrice fourier, mc;
    if (elswap_price_fourier(model, 30.0, 0.5, &fourier) != ELSWAP_STATUS_OK ||
        elswap_price_mc(model, 30.0, 0.5, 42, 50000, 500, &mc) != ELSWAP_STATUS_OK) {
        fprintf(stderr, "price: %s\n", elswap_last_error());
        elswap_model_free(model);
        return 2;
    }
    printf("fourier call %.10f put %.10f\n", fourier.call, fourier.put);
    printf("mc      call %.10f +- %.10f\n", mc.call, mc.std_error);
    elswap_model_free(model);
    return 0;
}
