#include <stdio.h>
#include <string.h>

#include "uqf.h"

#define CHECK(cond)                                              \
  do {                                                           \
    if (!(cond)) {                                               \
      fprintf(stderr, "check failed at line %d: %s\n", __LINE__, #cond); \
      return 1;                                                  \
    }                                                            \
  } while (0)

int main(void) {
  UqfCf *cf = NULL;
  CHECK(uqf_cf_expand_xi(7, &cf) == UQF_STATUS_OK);
  size_t len = 0;
  CHECK(uqf_cf_period_len(cf, &len) == UQF_STATUS_OK && len == 4);
  int64_t c = 0;
  CHECK(uqf_cf_coefficient(cf, 4, &c) == UQF_STATUS_OK && c == 4);
  char *s = NULL;
  CHECK(uqf_cf_to_string(cf, &s) == UQF_STATUS_OK);
  CHECK(strcmp(s, "[2; (1,1,1,4)]") == 0);
  uqf_string_free(s);
  uqf_cf_free(cf);

  CHECK(uqf_cf_expand_xi(12, &cf) == UQF_STATUS_INVALID_INPUT);
  CHECK(uqf_last_error() != NULL);

  int64_t e8[64] = {0};
  static const int edges[7][2] = {{0, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 6}, {6, 7}, {1, 3}};
  for (int i = 0; i < 8; i++) e8[i * 8 + i] = 2;
  for (int k = 0; k < 7; k++) {
    e8[edges[k][0] * 8 + edges[k][1]] = -1;
    e8[edges[k][1] * 8 + edges[k][0]] = -1;
  }
  UqfGram *g = NULL;
  CHECK(uqf_gram_new(e8, 8, &g) == UQF_STATUS_OK);
  uint64_t n = 0;
  CHECK(uqf_gram_count_vectors(g, 2, 0, &n) == UQF_STATUS_OK && n == 240);
  uqf_gram_free(g);

  uint64_t r = 0;
  CHECK(uqf_min_rank_classical(10, 1, &r) == UQF_STATUS_OK && r == 6);
  printf("ok\n");
  return 0;
}
