#include <ostream>

#include "app.hpp"
#include "commands.hpp"
#include "donorspin/csv.hpp"
#include "donorspin/errors.hpp"
#include "donorspin/protocol_config.hpp"
#include "donorspin/relaxation.hpp"
#include "svg_plot.hpp"

namespace donorspin::cli {

int run_theory(const Context& ctx, const TheoryArgs& args) {
  const Geometry geometry = parse_geometry(args.geometry);
  const auto fields = parse_grid(args.fields);
  if (!(args.temperature >= 0.0)) throw ArgumentError("--temp must be >= 0");
  const auto mc = ctx.material();
  const auto donor = derive_donor(mc.material, mc.donor);
  const auto points = sweep_field(mc.material, donor, geometry, fields, args.temperature);
  for (const auto& w : lwa_warnings(mc.material, donor, fields)) ctx.err << "warning: " << w << '\n';

  auto outputs = ctx.outputs();
  const std::string stem = "theory_" + std::string(to_string(geometry));
  const auto csv_path = outputs.write(stem + ".csv", [&](std::ostream& o) { write_sweep_csv(o, points); });

  Plot plot;
  plot.title = "T1 vs B, " + std::string(to_string(geometry)) + ", " + csv::format_number(args.temperature) + " K";
  plot.x_label = "B (T)";
  plot.y_label = "T1 (s)";
  plot.log_x = plot.log_y = true;
  Series s;
  s.label = std::string(to_string(geometry));
  for (const auto& p : points) {
    s.x.push_back(p.field_T);
    s.y.push_back(p.t1);
  }
  plot.series.push_back(s);
  outputs.write(stem + ".svg", [&](std::ostream& o) { write_svg(o, plot); });
  outputs.finish();

  ctx.out << "theory: " << points.size() << " points, " << to_string(geometry) << ", T = "
          << csv::format_number(args.temperature) << " K -> " << csv_path.string() << '\n';
  return kExitOk;
}

}  // namespace donorspin::cli
