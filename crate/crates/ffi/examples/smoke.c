#include <math.h>
#include <stdio.h>
#include <string.h>

#include "voicelens.h"

#define CHECK(x)                                                              \
  do {                                                                        \
    if (!(x)) {                                                               \
      const char *e = vl_last_error_message();                                \
      fprintf(stderr, "failed: %s (%s)\n", #x, e ? e : "no error");           \
      return 1;                                                               \
    }                                                                         \
  } while (0)

int main(void) {
  VlLexicon *lex = NULL;
  double compound = 0.0;
  CHECK(vl_lexicon_bundled(&lex) == VL_STATUS_OK);
  CHECK(vl_lexicon_score(lex, "This is great", &compound) == VL_STATUS_OK);
  CHECK(vl_classify_compound(compound) == VL_SENTIMENT_POSITIVE);
  vl_lexicon_free(lex);

  uint8_t pred[4] = {1, 1, 0, 0};
  uint8_t truth[4] = {1, 0, 1, 0};
  double k = 1.0;
  CHECK(vl_cohen_kappa(pred, truth, 4, &k) == VL_STATUS_OK);
  CHECK(fabs(k) < 1e-12);

  char *prompt = NULL;
  CHECK(vl_build_sentiment_prompt("Budgets are tight.", &prompt) == VL_STATUS_OK);
  CHECK(strstr(prompt, "Budgets are tight.") != NULL);
  vl_string_free(prompt);

  CHECK(vl_build_sentiment_prompt(NULL, &prompt) == VL_STATUS_NULL_POINTER);
  printf("ok\n");
  return 0;
}
