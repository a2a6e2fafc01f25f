// Runs every preset once and reports each acceptance criterion on one line.

#include <cstdio>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "lsmcf/errors.hpp"
#include "lsmcf/experiment.hpp"

using namespace lsmcf;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::map<std::string, ExperimentResult> results;
std::map<std::string, std::string> crashes;
int failures = 0;

const Clause* clause(const std::string& preset_name, const std::string& key) {
  const auto it = results.find(preset_name);
  if (it == results.end()) return nullptr;
  const auto c = it->second.clauses.find(key);
  return c == it->second.clauses.end() ? nullptr : &c->second;
}

double num(const json& j, const char* key) {
  return j.contains(key) && j[key].is_number() ? j[key].get<double>() : -1.0;
}

void report(const char* ac, bool pass, const std::string& what) {
  if (!pass) ++failures;
  std::printf("%s %s %s\n", ac, pass ? "PASS" : "FAIL", what.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

void missing(const char* ac, const std::string& preset_name, const std::string& key) {
  const auto e = crashes.find(preset_name);
  report(ac, false, preset_name + ": " + (e != crashes.end() ? e->second : "no clause " + key));
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path root = argc > 1 ? fs::path(argv[1]) : fs::path("acceptance_out");
  for (const auto& name : preset_names()) {
    ExperimentConfig c = preset(name);
    c.output_directory = root / name;
    try {
      results.emplace(name, run_experiment(c));
      std::printf("# %s finished in %.1f s\n", name.c_str(), results.at(name).runtime_s);
    } catch (const std::exception& e) {
      crashes[name] = e.what();
      std::printf("# %s aborted: %s\n", name.c_str(), e.what());
    }
    std::fflush(stdout);
  }

  if (const Clause* c = clause("shrinking_circle", "radius_law"))
    report("AC1", c->pass,
           fmt("shrinking_circle radius rel err %.3g (tol %.3g), runtime %.1f s (limit %.0f s)",
               num(c->detail, "radius_rel_err"), num(c->detail, "tolerance"),
               num(c->detail, "runtime_s"), num(c->detail, "runtime_limit_s")));
  else
    missing("AC1", "shrinking_circle", "radius_law");

  if (const Clause* c = clause("shrinking_circle", "viscous_dissipation"))
    report("AC2", c->pass,
           fmt("max step increase %.3g (tol %.3g), defect/drop %.3g (tol %.3g)",
               num(c->detail, "max_step_increase"), num(c->detail, "step_tolerance"),
               num(c->detail, "defect_over_drop"), num(c->detail, "defect_tolerance")));
  else
    missing("AC2", "shrinking_circle", "viscous_dissipation");

  {
    bool pass = true;
    int seen = 0;
    double worst = 0.0;
    std::string failed;
    for (const auto& name : preset_names()) {
      for (const char* key : {"curvature_mass", "curvature_mass_ladder"}) {
        const Clause* c = clause(name, key);
        if (!c) {
          if (std::string(key) == "curvature_mass") {
            pass = false;
            failed += " " + name + "(missing)";
          }
          continue;
        }
        ++seen;
        if (c->detail.contains("runs"))
          for (const auto& r : c->detail["runs"]) worst = std::max(worst, num(r, "max_relative_increase"));
        if (!c->pass) {
          pass = false;
          failed += " " + name + "/" + key;
        }
      }
    }
    report("AC3", pass,
           fmt("%g curvature clauses, worst per-interval increase %.3g", seen, worst) +
               (failed.empty() ? "" : ", failing:" + failed));
  }

  if (const Clause* c = clause("shrinking_circle", "bv_residuals")) {
    std::string what;
    for (auto& [id, e] : c->detail["identities"].items()) {
      what += " " + id + fmt(" median %.3g", num(e, "median_rel"));
      for (const auto& d : e["refinement"]) what += fmt(" ratio %.3g", num(d, "ratio_fine_over_coarse"));
    }
    report("AC4", c->pass, "residual medians and refinement ratios:" + what);
  } else {
    missing("AC4", "shrinking_circle", "bv_residuals");
  }

  if (const Clause* c = clause("shrinking_circle", "level_dissipation")) {
    double worst = 0.0;
    for (const auto& l : c->detail["levels"]) worst = std::max(worst, num(l, "relative_defect"));
    report("AC5", c->pass, fmt("worst relative defect %.3g (tol %.3g)", worst, num(c->detail, "tolerance")));
  } else {
    missing("AC5", "shrinking_circle", "level_dissipation");
  }

  if (const Clause* c = clause("nested_circles_comparison", "comparison"))
    report("AC6", c->pass,
           fmt("max(u1 - u2) %.3g (tol %.3g)", num(c->detail, "max_u1_minus_u2"), num(c->detail, "tolerance")));
  else
    missing("AC6", "nested_circles_comparison", "comparison");

  if (const Clause* c = clause("relabel_ladder", "relabel"))
    report("AC7", c->pass,
           fmt("deviation ratio %.3g (tol %.3g), affine deviation %.3g (tol %.3g)",
               num(c->detail, "ratio_smallest_over_largest"), num(c->detail, "ratio_tolerance"),
               num(c->detail, "affine_deviation"), num(c->detail, "affine_tolerance")));
  else
    missing("AC7", "relabel_ladder", "relabel");

  {
    const Clause* r = clause("neumann_half_circle", "radius_law");
    const Clause* n = clause("neumann_half_circle", "neumann_residuals");
    if (r && n)
      report("AC8", r->pass && n->pass,
             fmt("radius rel err %.3g (tol %.3g), boundary residuals ", num(r->detail, "radius_rel_err"),
                 num(r->detail, "tolerance")) +
                 (n->pass ? "within tolerance" : "out of tolerance"));
    else
      missing("AC8", "neumann_half_circle", "radius_law/neumann_residuals");
  }

  if (const Clause* c = clause("shrinking_circle", "l1_continuity"))
    report("AC9", c->pass,
           fmt("lhs %.5g, rhs %.5g, slack %.3g, perimeter weighted bound %.4g", num(c->detail, "lhs"),
               num(c->detail, "rhs"), num(c->detail, "slack"), num(c->detail, "perimeter_weighted_bound")));
  else
    missing("AC9", "shrinking_circle", "l1_continuity");

  if (const Clause* c = clause("shrinking_circle", "coarea_layer_cake"))
    report("AC10", c->pass,
           fmt("perimeter disagreement %.3g (tol %.3g), layer cake %.3g (tol %.3g)",
               num(c->detail, "max_perimeter_disagreement"), num(c->detail, "perimeter_tolerance"),
               num(c->detail, "max_layer_cake_rel"), num(c->detail, "layer_cake_tolerance")));
  else
    missing("AC10", "shrinking_circle", "coarea_layer_cake");

  if (const Clause* c = clause("epsilon_ladder_3d_small", "radius_law"))
    report("AC11", c->pass,
           fmt("3d radius rel err %.3g (tol %.3g), runtime %.1f s (limit %.0f s)",
               num(c->detail, "radius_rel_err"), num(c->detail, "tolerance"), num(c->detail, "runtime_s"),
               num(c->detail, "runtime_limit_s")));
  else
    missing("AC11", "epsilon_ladder_3d_small", "radius_law");

  std::printf("%d of 11 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
