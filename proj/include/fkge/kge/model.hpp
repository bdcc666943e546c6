#pragma once
// Score functions and analytic gradients for the translation model family.
// Scores are dissimilarities: lower means more plausible.

#include "fkge/kge/table.hpp"

namespace fkge::kge {

// Gradient of one triple's score with respect to every parameter row it
// touches. Unused members stay empty for the active model.
struct ScoreGrad {
    Vec head, relation, tail;
    Vec transh_normal;
    MatRM transr_proj;
    Vec transd_head_proj, transd_rel_proj, transd_tail_proj;
};

double score_triple(const EmbeddingTable& tbl, const kg::Triple& t, int norm_order);
double score_triple_grad(const EmbeddingTable& tbl, const kg::Triple& t, int norm_order,
                         ScoreGrad& grad);

}  // namespace fkge::kge
