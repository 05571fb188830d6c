#include <ostream>
#include <vector>

#include "app.hpp"
#include "commands.hpp"
#include "donorspin/csv.hpp"
#include "donorspin/errors.hpp"
#include "donorspin/phonon_oracle.hpp"
#include "donorspin/protocol_config.hpp"
#include "donorspin/quadrature.hpp"

namespace donorspin::cli {

int run_oracle(const Context& ctx, const OracleArgs& args) {
  std::vector<Geometry> geometries;
  if (args.geometry == "both") {
    geometries = {Geometry::Faraday, Geometry::Voigt};
  } else {
    geometries = {parse_geometry(args.geometry)};
  }
  const auto fields = parse_grid(args.fields);
  if (args.quad_order < 1) throw ArgumentError("--quad-order must be >= 1");
  const auto rule = sphere_product_rule(args.quad_order);
  if (rule.degree < kMinOracleDegree) {
    throw ArgumentError("--quad-order " + std::to_string(args.quad_order) + " integrates degree " +
                        std::to_string(rule.degree) + "; the oracle needs degree >= " +
                        std::to_string(kMinOracleDegree));
  }
  OracleOptions options;
  options.piezo_sum = args.piezo_sum == "coherent" ? PiezoSum::Coherent : PiezoSum::PerConstant;

  const auto mc = ctx.material();
  const auto donor = derive_donor(mc.material, mc.donor);
  const auto report = validate_against_analytic(geometries, fields, mc.material, donor, rule, options);

  auto outputs = ctx.outputs();
  const auto path = outputs.write("oracle.csv", [&](std::ostream& o) { write_oracle_csv(o, report); });
  outputs.finish();

  const double tol = ctx.globals.tolerance.value_or(1e-2);
  const bool ok = report.max_rel_err <= tol;
  ctx.out << "oracle: " << report.rows.size() << " rows, order " << args.quad_order
          << ", max rel err " << csv::format_number(report.max_rel_err) << " (tolerance "
          << csv::format_number(tol) << ") " << (ok ? "PASS" : "FAIL") << " -> " << path.string()
          << '\n';
  return ok ? kExitOk : kExitValidation;
}

}  // namespace donorspin::cli
