#include <stdio.h>
#include <string.h>

#include "comma_ea.h"

#define CHECK(cond)                                              \
  do {                                                           \
    if (!(cond)) {                                               \
      fprintf(stderr, "%s:%d: %s\n", __FILE__, __LINE__, #cond); \
      return 1;                                                  \
    }                                                            \
  } while (0)

int main(void) {
  CeEngine *engine = NULL;
  CHECK(ce_engine_new(30, 4, 12, 11, 0, &engine) == CE_STATUS_OK);

  bool success = false;
  CHECK(ce_engine_run(engine, 1000000, &success) == CE_STATUS_OK);
  CHECK(success);

  uint64_t generation = 0, evaluations = 0;
  CHECK(ce_engine_stats(engine, &generation, &evaluations, NULL, NULL) == CE_STATUS_OK);
  CHECK(evaluations == 4 + 12 * generation);

  uint64_t hist[31];
  CHECK(ce_engine_histogram(engine, hist, 31) == CE_STATUS_OK);
  uint64_t total = 0;
  for (int i = 0; i < 31; i++) total += hist[i];
  CHECK(total == 4);
  ce_engine_free(engine);

  CeEngine *bad = NULL;
  CHECK(ce_engine_new(30, 10, 5, 1, 0, &bad) == CE_STATUS_LAMBDA_BELOW_MU);
  CHECK(bad == NULL);
  CHECK(strlen(ce_last_error_message()) > 0);

  double gap = 0.0;
  CHECK(ce_epsilon_gap(10, 27, &gap) == CE_STATUS_OK);
  CHECK(gap > 0.006 && gap < 0.007);

  printf("comma-ea %s ok\n", ce_version());
  return 0;
}
