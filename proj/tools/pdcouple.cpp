// Command-line front end for the coupled peridynamic / finite-element solver.
#include "pdc/config.hpp"
#include "pdc/experiment.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

// Exit codes by failure class.
enum Exit : int {
  kOk = 0,
  kFailure = 1,
  kConfig = 2,
  kSolver = 3,
  kNotConverged = 4,
  kGeometry = 5,
};

int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const pdc::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kConfig;
  } catch (const pdc::ParameterError& e) {
    std::cerr << "parameter error: " << e.what() << "\n";
    return kConfig;
  } catch (const pdc::SolverError& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return kSolver;
  } catch (const pdc::DispatchError& e) {
    std::cerr << "solver dispatch error: " << e.what() << "\n";
    return kSolver;
  } catch (const pdc::OptimizationError& e) {
    std::cerr << "optimization error: " << e.what() << "\n";
    return kNotConverged;
  } catch (const pdc::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kGeometry;
  } catch (const std::exception& e) {
    std::cerr << "unexpected failure: " << e.what() << "\n";
    return kFailure;
  }
}

struct Overrides {
  double h = 0.0;
  double horizon = 0.0;
  std::string output;
  long max_iterations = -1;

  void apply(pdc::ExperimentConfig& c) const {
    if (h > 0.0) c.h = h;
    if (horizon > 0.0) c.horizon = horizon;
    if (!output.empty()) c.output_dir = output;
    if (max_iterations >= 0) c.optimizer.max_iterations = max_iterations;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimization-based coupling of a peridynamic (LPS) model and a linear-elastic finite-element model"};
  app.require_subcommand(1);

  std::vector<std::pair<std::string, std::string>> canned = {
      {"patch-test", "linear patch test on the unit cube"},
      {"converge", "manufactured quadratic solution under refinement"},
      {"bar-dirichlet", "prenotched bar under prescribed end displacements"},
      {"bar-neumann", "prenotched bar with a traction end load"},
  };
  std::vector<Overrides> overrides(canned.size());
  for (std::size_t k = 0; k < canned.size(); ++k) {
    CLI::App* sub = app.add_subcommand(canned[k].first, canned[k].second);
    sub->add_option("--spacing", overrides[k].h, "grid spacing h in mm");
    sub->add_option("--horizon", overrides[k].horizon, "horizon in mm");
    sub->add_option("-o,--output", overrides[k].output, "output directory");
    sub->add_option("--max-iterations", overrides[k].max_iterations, "LBFGS iteration cap");
    const std::string name = canned[k].first;
    const Overrides* ov = &overrides[k];
    sub->callback([name, ov]() {
      std::exit(guarded([&] {
        pdc::ExperimentConfig c = pdc::canned_config(name);
        ov->apply(c);
        if (name == "converge" && ov->h > 0.0) throw pdc::ParameterError("converge takes its levels from a config file");
        c.validate();
        return pdc::run_experiment(c, std::cout);
      }));
    });
  }

  std::string run_path;
  CLI::App* run = app.add_subcommand("run", "run the experiment described by a YAML config file");
  run->add_option("config", run_path, "configuration file")->required();
  run->callback([&]() {
    std::exit(guarded([&] { return pdc::run_experiment(pdc::parse_config(run_path), std::cout); }));
  });

  std::string grad_path;
  int components = 10;
  double step = 1e-6;
  unsigned seed = 11;
  CLI::App* grad = app.add_subcommand("check-gradient", "compare the reduced gradient with central differences");
  grad->add_option("config", grad_path, "configuration file")->required();
  grad->add_option("-n,--components", components, "number of random control components")->check(CLI::PositiveNumber);
  grad->add_option("--step", step, "finite-difference step")->check(CLI::PositiveNumber);
  grad->add_option("--seed", seed, "random seed");
  grad->callback([&]() {
    std::exit(guarded([&] {
      const pdc::ExperimentConfig c = pdc::parse_config(grad_path);
      const pdc::GradientCheck g = pdc::check_gradient(c, components, step, seed);
      std::cout.precision(6);
      for (std::size_t k = 0; k < g.components.size(); ++k)
        std::cout << "component " << g.components[k] << ": adjoint " << g.analytic[k] << ", central difference "
                  << g.finite_difference[k] << "\n";
      std::cout << "max relative error " << g.max_relative_error << "\n";
      return g.max_relative_error <= 1e-5 ? kOk : kFailure;
    }));
  });

  CLI11_PARSE(app, argc, argv);
  return kOk;
}
