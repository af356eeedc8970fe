// Batch front door: read a state-spec document, run the requested
// computations, write a machine-readable report plus CSV sidecars.

#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "phlim/phlim.hpp"

namespace {

constexpr int kExitSchema = 2;
constexpr int kExitNumeric = 3;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw phlim::io::SchemaError("cannot read spec file: " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw phlim::ArgumentError("cannot write output file: " + path);
  out << content;
  if (!out.good()) throw phlim::ArgumentError("failed writing output file: " + path);
}

std::string stem_of(const std::string& path) {
  const auto dot = path.rfind('.');
  const auto slash = path.rfind('/');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash))
    return path;
  return path.substr(0, dot);
}

struct CommonFlags {
  std::string spec_path;
  std::string out_path;
  std::string format = "json";
  std::string units;
  std::string grid;
  int l_max = 0;
  long seed = 0; // reserved
  bool verbose = false;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool out_required) {
  cmd->add_option("--spec", f.spec_path, "state-spec document (JSON)")
      ->required();
  auto* out = cmd->add_option("--out", f.out_path, "report output path");
  if (out_required) out->required();
  cmd->add_option("--format", f.format, "report format")
      ->check(CLI::IsMember({"json", "csv"}));
  cmd->add_option("--units", f.units, "units for reported values")
      ->check(CLI::IsMember({"si", "natural"}));
  cmd->add_option("--grid", f.grid, "quadrature grid as nk,ntheta,nphi");
  cmd->add_option("--lmax", f.l_max, "decomposition l_max override");
  cmd->add_option("--seed", f.seed, "reserved");
  cmd->add_flag("--verbose", f.verbose, "timing and progress on stderr");
}

phlim::io::PipelineOptions make_options(const CommonFlags& f) {
  phlim::io::PipelineOptions opt;
  opt.verbose = f.verbose;
  if (!f.grid.empty()) {
    phlim::io::GridParams g;
    if (std::sscanf(f.grid.c_str(), "%d,%d,%d", &g.n_k, &g.n_theta, &g.n_phi) != 3 ||
        g.n_k < 2 || g.n_theta < 2 || g.n_phi < 2)
      throw phlim::io::SchemaError("--grid expects nk,ntheta,nphi");
    opt.grid_override = g;
  }
  if (f.l_max > 0) opt.l_max_override = f.l_max;
  if (f.units == "si") opt.output_units = phlim::io::UnitsMode::si;
  if (f.units == "natural") opt.output_units = phlim::io::UnitsMode::natural;
  return opt;
}

/// Flat key,value,unit rendering of the report for --format csv.
void flatten_json(const phlim::io::json& j, const std::string& prefix,
                  std::ostringstream& os) {
  if (j.is_object()) {
    if (j.contains("value") && j.contains("unit") && j.size() == 2) {
      if (j["value"].is_array()) {
        for (std::size_t i = 0; i < j["value"].size(); ++i)
          os << prefix << '[' << i << "]," << j["value"][i].dump() << ','
             << j["unit"].get<std::string>() << '\n';
      } else {
        os << prefix << ',' << j["value"].dump() << ','
           << j["unit"].get<std::string>() << '\n';
      }
      return;
    }
    for (const auto& item : j.items())
      flatten_json(item.value(),
                   prefix.empty() ? item.key() : prefix + "." + item.key(), os);
    return;
  }
  if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i)
      flatten_json(j[i], prefix + "[" + std::to_string(i) + "]", os);
    return;
  }
  os << prefix << ',' << j.dump() << ",\n";
}

std::string render(const phlim::io::json& report, const std::string& format) {
  if (format == "csv") {
    std::ostringstream os;
    os << "key,value,unit\n";
    flatten_json(report, "", os);
    return os.str();
  }
  return report.dump(2) + "\n";
}

int run_command(const CommonFlags& f) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto doc = phlim::io::parse_document(read_file(f.spec_path));
  const auto opt = make_options(f);
  const auto result = phlim::io::run_pipeline(doc, opt);
  write_file(f.out_path, render(result.report, f.format));
  const std::string stem = stem_of(f.out_path);
  for (const auto& side : result.sidecars) write_file(stem + side.suffix, side.content);
  if (f.verbose) {
    const auto dt = std::chrono::duration<double>(
                        std::chrono::steady_clock::now() - t0)
                        .count();
    std::cerr << "phlim run: " << f.out_path << " written, " << result.sidecars.size()
              << " sidecar(s), " << dt << " s\n";
  }
  return 0;
}

int compare_command(const CommonFlags& f) {
  const auto doc = phlim::io::parse_document(read_file(f.spec_path));
  const auto opt = make_options(f);
  const auto result = phlim::io::compare_pipeline(doc, opt);
  const std::string text = render(result.report, f.format);
  if (f.out_path.empty())
    std::cout << text;
  else
    write_file(f.out_path, text);
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lorentz-invariant mass and mean propagation velocity of "
               "multiphoton light states"};
  app.require_subcommand(1);

  CommonFlags run_flags, cmp_flags;
  auto* run = app.add_subcommand("run", "execute the document's tasks");
  add_common(run, run_flags, true);
  auto* cmp = app.add_subcommand(
      "compare", "four-way velocity comparison for a packet state");
  add_common(cmp, cmp_flags, false);

  CLI11_PARSE(app, argc, argv);
  try {
    if (run->parsed()) return run_command(run_flags);
    return compare_command(cmp_flags);
  } catch (const phlim::io::SchemaError& e) {
    std::cerr << "spec error: " << e.what() << "\n";
    return kExitSchema;
  } catch (const phlim::Error& e) {
    std::cerr << "numeric contract violation: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
