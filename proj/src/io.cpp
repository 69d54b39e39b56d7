#include "threshold_lab/io.hpp"

#include <cmath>
#include <cstdio>

namespace threshold_lab::io {

std::string csv_number(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

namespace {
// NaN and infinities become null.
Json number(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }
}  // namespace

Json to_json(const ModelParams& p) {
    return Json{{"lambda", p.lambda}, {"mu", p.mu}, {"d", p.d}, {"m", p.m}};
}

Json to_json(const Estimate& e) {
    return Json{{"mean", number(e.mean)}, {"half_width", number(e.half_width)}, {"samples", e.samples}};
}

Json to_json(const fixedpoint::StationaryDistribution& dist) {
    return Json{{"lambda", dist.params.lambda},
                {"mu", dist.params.mu},
                {"d", dist.params.d},
                {"m", dist.params.m},
                {"delta2", dist.delta2},
                {"xi", dist.xi},
                {"delta", dist.delta},
                {"residual_max", dist.residual_max},
                {"flux_deviation_max", dist.flux_deviation_max}};
}

Json to_json(const metrics::PerformanceReport& r) {
    return Json{{"params", to_json(r.params)},
                {"eq_w", number(r.eq_w)},
                {"eq_d", number(r.eq_d)},
                {"eq", number(r.eq)},
                {"es_w", number(r.es_w)},
                {"es_v", number(r.es_v)},
                {"es_paper", number(r.es_paper)},
                {"es_little", number(r.es_little)},
                {"energy_saving", number(r.energy_saving)},
                {"flags", r.flags}};
}

Json to_json(const sim::SimConfig& c) {
    Json j{{"n_servers", c.n_servers},
           {"seed", c.seed},
           {"t_warmup", c.t_warmup ? Json(*c.t_warmup) : Json(nullptr)},
           {"t_measure", c.t_measure ? Json(*c.t_measure) : Json(nullptr)},
           {"n_batches", c.n_batches},
           {"n_replications", c.n_replications},
           {"queue_cap", c.queue_cap ? Json(*c.queue_cap) : Json(nullptr)},
           {"sampling", c.sampling == Sampling::without_replacement ? "without_replacement" : "with_replacement"},
           {"tie_break", c.tie_break == TieBreak::uniform ? "uniform" : "prefer_working"}};
    return j;
}

Json to_json(const sim::SimReport& r) {
    Json u = Json::array();
    for (double x : r.u_hat) u.push_back(number(x));
    Json v = Json::array();
    for (double x : r.v_hat) v.push_back(number(x));
    Json uh = Json::array();
    for (double x : r.u_half_width) uh.push_back(number(x));
    Json vh = Json::array();
    for (double x : r.v_half_width) vh.push_back(number(x));
    return Json{{"params", to_json(r.params)},
                {"config", to_json(r.config)},
                {"unstable", r.unstable},
                {"u_hat", u},
                {"u_half_width", uh},
                {"v_hat", v},
                {"v_half_width", vh},
                {"eq_mean", to_json(r.eq_mean)},
                {"es_mean", to_json(r.es_mean)},
                {"dormant_fraction", to_json(r.dormant_fraction)},
                {"tasks_completed", r.tasks_completed},
                {"arrivals", r.arrivals},
                {"replications", r.replications}};
}

Json to_json(const metrics::ThresholdSearch& s) {
    Json evaluated = Json::array();
    for (const auto& [m, value] : s.evaluated) evaluated.push_back(Json{{"m", m}, {"value", number(value)}});
    return Json{{"m_star", s.m_star}, {"linear_fallback", s.linear_fallback}, {"evaluated", evaluated}};
}

Json to_json(const oracle::CtmcSolution& s, bool full_vector) {
    Json j{{"params", to_json(s.params)},
           {"n_servers", s.n_servers},
           {"queue_cap", s.queue_cap},
           {"states", s.pi.size()},
           {"u", s.u},
           {"v", s.v},
           {"eq", s.eq},
           {"tail_mass", s.tail_mass},
           {"residual", s.residual}};
    if (full_vector) j["pi"] = s.pi;
    return j;
}

}  // namespace threshold_lab::io
