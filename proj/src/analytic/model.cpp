#include "spillway/analytic/model.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>

namespace spillway::analytic {

static void check(const ModelParams& p) {
    if (!(p.L > 0) || !(p.Tr > 0) || !(p.Ta > 0) || !(p.alpha > 0)) {
        throw DomainError("model parameters L, Tr, Ta and alpha must be positive");
    }
}

int fct_case(const ModelParams& p) {
    check(p);
    const double rto = p.rto();
    if (rto <= p.Tr) return 1;
    return std::fmod(p.Ta, rto) < p.Tr ? 2 : 3;
}

double fct_model(const ModelParams& p) {
    const double rto = p.rto();
    switch (fct_case(p)) {
        case 1: return p.Tr + p.Ta + p.rtt();
        case 2: return p.Ta + rto + p.rtt();
        default: return std::ceil(p.Ta / rto) * rto + p.Tr + p.rtt();
    }
}

double ideal_fct(const ModelParams& p) {
    check(p);
    return p.Tr + p.Ta + p.rtt();
}

double slowdown(const ModelParams& p) { return fct_model(p) / ideal_fct(p); }

double iteration_extrapolate(double t_bwd_stage, int pp, int mb) {
    if (pp < 1 || mb < 1) throw DomainError("pp and mb must be at least 1");
    if (!(t_bwd_stage > 0)) throw DomainError("t_bwd_stage must be positive");
    return 1.5 * t_bwd_stage * static_cast<double>(pp + mb - 1);
}

static std::vector<double> grid(double lo, double hi, double step) {
    if (!(step > 0) || hi < lo) throw DomainError("sweep grid needs step > 0 and max >= min");
    std::vector<double> out;
    const auto n = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
    for (long i = 0; i <= n; ++i) out.push_back(lo + static_cast<double>(i) * step);
    return out;
}

std::vector<SweepPoint> sweep(const SweepSpec& spec) {
    std::vector<SweepPoint> out;
    const auto trs = grid(spec.tr_min, spec.tr_max, spec.tr_step);
    const auto tas = grid(spec.ta_min, spec.ta_max, spec.ta_step);
    for (double L : spec.L_values) {
        for (double tr : trs) {
            for (double ta : tas) {
                SweepPoint pt;
                pt.params = {L, tr, ta, spec.alpha};
                pt.fct_case = fct_case(pt.params);
                pt.fct = fct_model(pt.params);
                pt.slowdown = pt.fct / ideal_fct(pt.params);
                out.push_back(pt);
            }
        }
    }
    return out;
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepPoint>& points) {
    os << "L_ms,Tr_ms,Ta_ms,alpha,case,fct_ms,ideal_ms,slowdown\n";
    os << std::setprecision(10);
    for (const auto& pt : points) {
        const auto& p = pt.params;
        os << p.L * 1e3 << ',' << p.Tr * 1e3 << ',' << p.Ta * 1e3 << ',' << p.alpha << ',' << pt.fct_case << ','
           << pt.fct * 1e3 << ',' << ideal_fct(p) * 1e3 << ',' << pt.slowdown << '\n';
    }
}

}  // namespace spillway::analytic
