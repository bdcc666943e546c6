#include "fkge/kge/model.hpp"

#include <stdexcept>

namespace fkge::kge {

namespace {

double norm_value(const Vec& u, int order) {
    return order == 1 ? u.lpNorm<1>() : u.norm();
}

// d(norm)/du. Subgradient at kinks: sign(0) = 0, and zero vector -> zero.
Vec norm_grad(const Vec& u, int order) {
    if (order == 1) return u.array().sign().matrix();
    const double n = u.norm();
    if (n == 0.0) return Vec::Zero(u.size());
    return u / n;
}

void check_ids(const EmbeddingTable& tbl, const kg::Triple& t) {
    if (t.head >= tbl.entity_count() || t.tail >= tbl.entity_count() ||
        t.relation >= tbl.relation_count())
        throw std::out_of_range("triple id out of range for embedding table");
}

}  // namespace

double score_triple(const EmbeddingTable& tbl, const kg::Triple& t, int norm_order) {
    check_ids(tbl, t);
    const Vec h = tbl.entities().row(t.head);
    const Vec r = tbl.relations().row(t.relation);
    const Vec tl = tbl.entities().row(t.tail);
    switch (tbl.model()) {
        case ModelKind::TransE:
            return norm_value(h + r - tl, norm_order);
        case ModelKind::TransH: {
            const Vec w = tbl.transh_normals().row(t.relation);
            const Vec hp = h - w.dot(h) * w;
            const Vec tp = tl - w.dot(tl) * w;
            return norm_value(hp + r - tp, norm_order);
        }
        case ModelKind::TransR: {
            const MatRM& m = tbl.transr_proj()[t.relation];
            return norm_value(m * h + r - m * tl, norm_order);
        }
        case ModelKind::TransD: {
            const Vec hp = tbl.transd_ent_proj().row(t.head);
            const Vec tp = tbl.transd_ent_proj().row(t.tail);
            const Vec rp = tbl.transd_rel_proj().row(t.relation);
            const Vec hh = h + hp.dot(h) * rp;
            const Vec tt = tl + tp.dot(tl) * rp;
            return norm_value(hh + r - tt, norm_order);
        }
    }
    throw std::logic_error("unreachable model kind");
}

double score_triple_grad(const EmbeddingTable& tbl, const kg::Triple& t, int norm_order,
                         ScoreGrad& grad) {
    check_ids(tbl, t);
    const Vec h = tbl.entities().row(t.head);
    const Vec r = tbl.relations().row(t.relation);
    const Vec tl = tbl.entities().row(t.tail);
    switch (tbl.model()) {
        case ModelKind::TransE: {
            const Vec u = h + r - tl;
            const Vec g = norm_grad(u, norm_order);
            grad.head = g;
            grad.relation = g;
            grad.tail = -g;
            return norm_value(u, norm_order);
        }
        case ModelKind::TransH: {
            const Vec w = tbl.transh_normals().row(t.relation);
            const Vec a = h - tl;
            const double c = w.dot(a);
            const Vec u = a + r - c * w;
            const Vec g = norm_grad(u, norm_order);
            const double gw = g.dot(w);
            grad.head = g - gw * w;
            grad.tail = -(g - gw * w);
            grad.relation = g;
            grad.transh_normal = -(gw * a + c * g);
            return norm_value(u, norm_order);
        }
        case ModelKind::TransR: {
            const MatRM& m = tbl.transr_proj()[t.relation];
            const Vec u = m * (h - tl) + r;
            const Vec g = norm_grad(u, norm_order);
            grad.head = m.transpose() * g;
            grad.tail = -grad.head;
            grad.relation = g;
            grad.transr_proj = g * (h - tl).transpose();
            return norm_value(u, norm_order);
        }
        case ModelKind::TransD: {
            const Vec hp = tbl.transd_ent_proj().row(t.head);
            const Vec tp = tbl.transd_ent_proj().row(t.tail);
            const Vec rp = tbl.transd_rel_proj().row(t.relation);
            const double ch = hp.dot(h);
            const double ct = tp.dot(tl);
            const Vec u = h + ch * rp + r - tl - ct * rp;
            const Vec g = norm_grad(u, norm_order);
            const double grp = g.dot(rp);
            grad.head = g + grp * hp;
            grad.tail = -g - grp * tp;
            grad.relation = g;
            grad.transd_head_proj = grp * h;
            grad.transd_tail_proj = -grp * tl;
            grad.transd_rel_proj = (ch - ct) * g;
            return norm_value(u, norm_order);
        }
    }
    throw std::logic_error("unreachable model kind");
}

}  // namespace fkge::kge
