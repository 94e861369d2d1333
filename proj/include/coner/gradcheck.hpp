#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "coner/errors.hpp"
#include "coner/params.hpp"

namespace coner {

struct GradCheckEntry {
    std::string name;
    double max_rel_error = 0.0;
    bool ok = true;
};

struct GradCheckReport {
    std::vector<GradCheckEntry> entries;
    double max_rel_error = 0.0;
    bool ok = true;
};

// Central finite differences against analytic grads, per parameter.
// `f` evaluates the scalar loss at the current parameters; `analytic` holds
// d loss / d param for every checked name. f64 only.
inline GradCheckReport grad_check(const std::function<double()>& f, ParamStore<double>& params,
                                  const GradStore<double>& analytic,
                                  const std::vector<std::string>& names, double h,
                                  double tolerance) {
    GradCheckReport report;
    for (const auto& name : names) {
        Tensor<double>& p = params.get(name);
        auto it = analytic.grads.find(name);
        if (it == analytic.grads.end()) throw ShapeError("grad_check: no analytic grad for " + name);
        const Tensor<double>& g = it->second;
        GradCheckEntry entry;
        entry.name = name;
        for (std::size_t i = 0; i < p.data.size(); ++i) {
            double orig = p.data[i];
            p.data[i] = orig + h;
            double fp = f();
            p.data[i] = orig - h;
            double fm = f();
            p.data[i] = orig;
            if (!std::isfinite(fp) || !std::isfinite(fm))
                throw NumericError("grad_check: non-finite loss at " + name);
            double num = (fp - fm) / (2.0 * h);
            double ana = g.data[i];
            double denom = std::max({std::fabs(num), std::fabs(ana), 1e-8});
            double rel = std::fabs(num - ana) / denom;
            entry.max_rel_error = std::max(entry.max_rel_error, rel);
        }
        entry.ok = entry.max_rel_error < tolerance;
        report.max_rel_error = std::max(report.max_rel_error, entry.max_rel_error);
        report.ok = report.ok && entry.ok;
        report.entries.push_back(entry);
    }
    return report;
}

}  // namespace coner
