#pragma once

#include <iosfwd>
#include <stdexcept>
#include <vector>

namespace spillway::analytic {

/// Parameters of the worst-case collision model. Times are in seconds.
struct ModelParams {
    double L = 5e-3;       // one-way cross-DC delay
    double Tr = 5e-3;      // remote flow transmission time
    double Ta = 10e-3;     // local collective transmission time
    double alpha = 1.68;   // RTO multiplier

    double rtt() const { return 2.0 * L; }
    double rto() const { return alpha * rtt(); }
};

class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Which branch of the piecewise formula applies (1, 2 or 3).
int fct_case(const ModelParams& p);

/// Worst-case cross-DC FCT when a local collective blocks the destination port.
double fct_model(const ModelParams& p);

/// T_r + T_a + RTT.
double ideal_fct(const ModelParams& p);

double slowdown(const ModelParams& p);

/// Iteration time from one stage's backward-pass time under a pipeline schedule.
double iteration_extrapolate(double t_bwd_stage, int pp, int mb);

struct SweepSpec {
    std::vector<double> L_values = {5e-3, 10e-3, 20e-3, 30e-3};
    double tr_min = 1e-3, tr_max = 50e-3, tr_step = 1e-3;
    double ta_min = 1e-3, ta_max = 50e-3, ta_step = 1e-3;
    double alpha = 1.68;
};

struct SweepPoint {
    ModelParams params;
    int fct_case = 0;
    double fct = 0.0;
    double slowdown = 0.0;
};

std::vector<SweepPoint> sweep(const SweepSpec& spec);

/// Heatmap CSV: L_ms,Tr_ms,Ta_ms,alpha,case,fct_ms,ideal_ms,slowdown
void write_sweep_csv(std::ostream& os, const std::vector<SweepPoint>& points);

}  // namespace spillway::analytic
