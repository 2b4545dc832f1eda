// romkit: reduced-order-modeling toolkit command line.
//
// Subcommands wrap the library modules around file I/O: snapshot datasets in
// csv / romk binary, fitted models in the romk container, morph geometry as
// ASCII STL or point-cloud csv. Every run writes <out>.run.json (deterministic
// summary) and <out>.timing.json (wall clock, kept separate so result files
// and summaries are byte-identical across reruns).

#include <CLI11.hpp>
#include <json.hpp>

#include "romkit/asub.hpp"
#include "romkit/dmd.hpp"
#include "romkit/interp.hpp"
#include "romkit/morph.hpp"
#include "romkit/parallel.hpp"
#include "romkit/podi.hpp"
#include "romkit/snapshots.hpp"
#include "romkit/stl_io.hpp"
#include "romkit/svd.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace romkit;

namespace {

struct GlobalOpts {
    std::string config_path;
    int threads = -1;  // -1: not set on the command line
    long seed = 0;
    bool verbose = false;
    json config;  // loaded --config document, empty object otherwise
};

void info(const GlobalOpts& g, const std::string& msg) {
    if (g.verbose) std::cerr << "romkit: " << msg << "\n";
}

void warn(const std::string& msg) { std::cerr << "romkit: warning: " << msg << "\n"; }

json load_config(const std::string& path) {
    if (path.empty()) return json::object();
    std::ifstream is(path);
    if (!is) throw IoError("cannot open config file " + path);
    json cfg;
    try {
        is >> cfg;
    } catch (const json::exception& e) {
        throw FormatError("config file " + path + ": " + e.what());
    }
    if (!cfg.is_object()) throw FormatError("config file " + path + " must hold a JSON object");
    return cfg;
}

// flag > config entry > built-in default
template <typename T>
T pick(const CLI::Option* opt, const T& cli_value, const json& cfg, const char* key,
       const T& fallback) {
    if (opt != nullptr && opt->count() > 0) return cli_value;
    if (cfg.contains(key)) return cfg.at(key).get<T>();
    return fallback;
}

void write_text_atomic(const fs::path& path, const std::string& body) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw IoError("cannot open " + tmp.string() + " for writing");
        os << body;
        os.flush();
        if (!os) throw IoError("failed writing " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp);
        throw IoError("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
    }
}

struct RunRecorder {
    json summary;
    fs::path anchor;
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

    RunRecorder(const GlobalOpts& g, const std::string& command, const fs::path& anchor_path)
        : anchor(anchor_path) {
        // declared outputs must land in an existing directory, checked before
        // any compute starts
        const fs::path parent = anchor.parent_path();
        if (!parent.empty() && !fs::is_directory(parent))
            throw IoError("output directory " + parent.string() + " does not exist");
        summary["command"] = command;
        summary["inputs"] = json::object();
        summary["outputs"] = json::object();
        summary["parameters"] = json::object();
        summary["residuals"] = json::object();
        summary["seed"] = g.seed;
        const char* env = std::getenv("ROMKIT_THREADS");
        summary["threads"] = {{"romkit_threads_env", env ? env : ""},
                              {"effective", thread_count()}};
    }

    void finish() const {
        fs::path run = anchor;
        run += ".run.json";
        write_text_atomic(run, summary.dump(2) + "\n");
        fs::path timing = anchor;
        timing += ".timing.json";
        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        json t;
        t["elapsed_seconds"] = elapsed;
        write_text_atomic(timing, t.dump(2) + "\n");
    }
};

SnapshotFormat pick_format(const std::string& flag, const fs::path& path) {
    if (flag == "csv") return SnapshotFormat::Csv;
    if (flag == "romk") return SnapshotFormat::RomkBinary;
    if (flag.empty()) return format_from_extension(path);
    throw ValidationError("unknown format '" + flag + "', expected csv or romk");
}

std::string rank_spec_name(const RankSpec& spec) {
    switch (spec.mode) {
        case RankSpec::Mode::Full: return "full";
        case RankSpec::Mode::Fixed: return "fixed(" + std::to_string(spec.count) + ")";
        case RankSpec::Mode::Energy: return "energy(" + format_double(spec.tau) + ")";
    }
    return "full";
}

// --rank and --energy are mutually exclusive; absent both, keep every mode
// above the float noise floor via energy(1).
RankSpec rank_from_options(const CLI::Option* rank_opt, std::size_t rank_value,
                           const CLI::Option* energy_opt, double energy_value, const json& cfg) {
    if (rank_opt->count() > 0) return RankSpec::fixed(rank_value);
    if (energy_opt->count() > 0) return RankSpec::energy(energy_value);
    if (cfg.contains("rank")) return RankSpec::fixed(cfg.at("rank").get<std::size_t>());
    if (cfg.contains("energy")) return RankSpec::energy(cfg.at("energy").get<double>());
    return RankSpec::energy(1.0);
}

std::vector<double> parse_vector(const std::string& csv) {
    std::vector<double> out;
    std::size_t start = 0;
    while (start <= csv.size()) {
        const std::size_t pos = csv.find(',', start);
        const std::string field =
            csv.substr(start, pos == std::string::npos ? std::string::npos : pos - start);
        try {
            std::size_t used = 0;
            out.push_back(std::stod(field, &used));
            if (used != field.size()) throw std::invalid_argument(field);
        } catch (const std::exception&) {
            throw ValidationError("cannot parse '" + field + "' in vector '" + csv + "'");
        }
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return out;
}

void write_state_csv(const fs::path& path, std::span<const double> state) {
    std::string body;
    for (double v : state) {
        body += format_double(v);
        body += "\n";
    }
    write_text_atomic(path, body);
}

// ---- morph configuration documents ------------------------------------

json load_json_doc(const fs::path& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open " + path.string());
    try {
        json doc;
        is >> doc;
        return doc;
    } catch (const json::exception& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

std::array<double, 3> triple(const json& j, const std::string& what) {
    if (!j.is_array() || j.size() != 3)
        throw FormatError(what + " must be an array of 3 numbers");
    return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()};
}

morph::FfdLattice lattice_from_json(const json& doc, const std::string& what) {
    morph::FfdLattice lat;
    lat.origin = triple(doc.at("origin"), what + ": origin");
    const json& axes = doc.at("axes");
    if (!axes.is_array() || axes.size() != 3) throw FormatError(what + ": axes must hold 3 vectors");
    for (std::size_t a = 0; a < 3; ++a) lat.axes[a] = triple(axes.at(a), what + ": axis");
    const json& dims = doc.at("dims");
    if (!dims.is_array() || dims.size() != 3) throw FormatError(what + ": dims must hold 3 counts");
    for (std::size_t a = 0; a < 3; ++a) lat.dims[a] = dims.at(a).get<std::size_t>();
    lat.displacements.assign(lat.control_count(), {0.0, 0.0, 0.0});
    if (doc.contains("displacements")) {
        for (const json& row : doc.at("displacements")) {
            if (!row.is_array() || row.size() != 6)
                throw FormatError(what + ": displacement rows are [i,j,k,dx,dy,dz]");
            const auto i = row.at(0).get<std::size_t>();
            const auto j = row.at(1).get<std::size_t>();
            const auto k = row.at(2).get<std::size_t>();
            if (i >= lat.dims[0] || j >= lat.dims[1] || k >= lat.dims[2])
                throw RangeError(what + ": control index (" + std::to_string(i) + "," +
                                 std::to_string(j) + "," + std::to_string(k) + ") out of range");
            lat.displacement(i, j, k) = {row.at(3).get<double>(), row.at(4).get<double>(),
                                         row.at(5).get<double>()};
        }
    }
    morph::validate(lat);
    return lat;
}

void controls_from_json(const json& doc, const std::string& what, morph::PointCloud& controls,
                        Matrix& displacements) {
    const json& ctl = doc.at("controls");
    const json& disp = doc.at("displacements");
    if (!ctl.is_array() || ctl.empty()) throw FormatError(what + ": controls must be non-empty");
    if (!disp.is_array() || disp.size() != ctl.size())
        throw FormatError(what + ": displacements must match controls one to one");
    controls.points = Matrix(3, ctl.size());
    displacements = Matrix(3, ctl.size());
    for (std::size_t j = 0; j < ctl.size(); ++j) {
        const auto c = triple(ctl.at(j), what + ": control");
        const auto d = triple(disp.at(j), what + ": displacement");
        for (std::size_t i = 0; i < 3; ++i) {
            controls.points(i, j) = c[i];
            displacements(i, j) = d[i];
        }
    }
}

// Geometry carrier for morph subcommands: STL mesh or point-cloud csv.
struct Geometry {
    bool is_mesh = false;
    morph::TriMesh mesh;
    morph::PointCloud cloud;
};

Geometry load_geometry(const fs::path& path, bool weld, double weld_tol) {
    Geometry g;
    if (path.extension() == ".stl") {
        g.is_mesh = true;
        g.mesh = morph::read_stl(path);
        if (weld) g.mesh = morph::weld_vertices(g.mesh, weld_tol);
        const auto degenerate = morph::validate_mesh(g.mesh);
        if (!degenerate.empty())
            warn(path.string() + ": " + std::to_string(degenerate.size()) +
                 " degenerate (zero-area) triangles");
        g.cloud.points = g.mesh.vertices;
    } else {
        const SnapshotSet set = load_snapshots(path, format_from_extension(path));
        if (set.n_dof() != 3)
            throw DimensionError(path.string() + ": point-cloud csv needs 3 rows (x, y, z), got " +
                                 std::to_string(set.n_dof()));
        g.cloud.points = set.data;
    }
    return g;
}

void save_geometry(const Geometry& g, const morph::PointCloud& deformed, const fs::path& path) {
    if (g.is_mesh) {
        if (path.extension() != ".stl")
            throw ValidationError("mesh input requires a .stl output path");
        morph::TriMesh out = g.mesh;
        out.vertices = deformed.points;
        morph::write_stl(out, path);
    } else {
        SnapshotSet set;
        set.data = deformed.points;
        save_snapshots(set, path, format_from_extension(path));
    }
}

// ---- subcommand registration -------------------------------------------

using Runner = std::function<void(const GlobalOpts&)>;

void add_snap(CLI::App& app, Runner& runner) {
    CLI::App* snap = app.add_subcommand("snap", "inspect and convert snapshot datasets");
    snap->require_subcommand(1);

    auto* cmd_info = snap->add_subcommand("info", "print dataset shape, dt and checksum");
    auto in = std::make_shared<std::string>();
    auto fmt = std::make_shared<std::string>();
    cmd_info->add_option("--in", *in, "input dataset")->required();
    cmd_info->add_option("--format", *fmt, "csv or romk (default: by extension)");
    cmd_info->callback([&runner, in, fmt] {
        runner = [in, fmt](const GlobalOpts&) {
            const SnapshotSet set = load_snapshots(*in, pick_format(*fmt, *in));
            const DatasetManifest m = manifest_for(set);
            json out;
            out["n_dof"] = m.n_dof;
            out["m"] = m.m;
            if (m.dt) out["dt"] = *m.dt;
            out["has_times"] = set.times.has_value();
            out["n_params"] = set.params ? set.params->rows() : 0;
            char buf[24];
            std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(m.checksum));
            out["checksum"] = buf;
            std::cout << out.dump(2) << "\n";
        };
    });

    auto* cmd_convert = snap->add_subcommand("convert", "convert between csv and romk binary");
    auto cin = std::make_shared<std::string>();
    auto cout_path = std::make_shared<std::string>();
    auto ifmt = std::make_shared<std::string>();
    auto ofmt = std::make_shared<std::string>();
    cmd_convert->add_option("--in", *cin, "input dataset")->required();
    cmd_convert->add_option("--out", *cout_path, "output dataset")->required();
    cmd_convert->add_option("--in-format", *ifmt, "override input format");
    cmd_convert->add_option("--out-format", *ofmt, "override output format");
    cmd_convert->callback([&runner, cin, cout_path, ifmt, ofmt] {
        runner = [cin, cout_path, ifmt, ofmt](const GlobalOpts& g) {
            RunRecorder rec(g, "snap convert", *cout_path);
            const SnapshotSet set = load_snapshots(*cin, pick_format(*ifmt, *cin));
            save_snapshots(set, *cout_path, pick_format(*ofmt, *cout_path));
            rec.summary["inputs"]["in"] = *cin;
            rec.summary["outputs"]["out"] = *cout_path;
            rec.summary["parameters"]["n_dof"] = set.n_dof();
            rec.summary["parameters"]["m"] = set.m();
            rec.finish();
        };
    });
}

void add_dmd(CLI::App& app, Runner& runner) {
    CLI::App* grp = app.add_subcommand("dmd", "dynamic mode decomposition");
    grp->require_subcommand(1);

    {
        auto* cmd = grp->add_subcommand("fit", "fit a dmd model from snapshots");
        auto in = std::make_shared<std::string>();
        auto fmt = std::make_shared<std::string>();
        auto out = std::make_shared<std::string>();
        auto rank = std::make_shared<std::size_t>(0);
        auto energy = std::make_shared<double>(1.0);
        auto dt = std::make_shared<double>(0.0);
        cmd->add_option("--in", *in, "snapshot dataset")->required();
        cmd->add_option("--format", *fmt, "csv or romk");
        cmd->add_option("--out", *out, "model output (.romk)")->required();
        auto* rank_opt = cmd->add_option("--rank", *rank, "fixed truncation rank");
        auto* energy_opt = cmd->add_option("--energy", *energy, "cumulative energy fraction");
        rank_opt->excludes(energy_opt);
        energy_opt->excludes(rank_opt);
        auto* dt_opt = cmd->add_option("--dt", *dt, "sampling step override");
        cmd->callback([&runner, in, fmt, out, rank, energy, dt, rank_opt, energy_opt, dt_opt] {
            runner = [=](const GlobalOpts& g) {
                RunRecorder rec(g, "dmd fit", *out);
                SnapshotSet set = load_snapshots(*in, pick_format(*fmt, *in));
                const double dt_value = pick(dt_opt, *dt, g.config, "dt", 0.0);
                if (dt_value > 0.0) set.dt_explicit = dt_value;
                const RankSpec spec = rank_from_options(rank_opt, *rank, energy_opt, *energy, g.config);
                const dmd::DmdModel model = dmd::fit(set, spec);
                dmd::save_model(model, *out);
                info(g, "fitted rank " + std::to_string(model.rank) + " dmd model");
                rec.summary["inputs"]["in"] = *in;
                rec.summary["outputs"]["model"] = *out;
                rec.summary["parameters"]["rank_spec"] = rank_spec_name(spec);
                rec.summary["parameters"]["rank"] = model.rank;
                rec.summary["parameters"]["dt"] = model.dt;
                rec.summary["residuals"]["training_relative_error"] =
                    dmd::training_residual(model, set);
                rec.finish();
            };
        });
    }
    {
        auto* cmd = grp->add_subcommand("reconstruct", "training-window state at step k");
        auto model_path = std::make_shared<std::string>();
        auto out = std::make_shared<std::string>();
        auto step = std::make_shared<std::size_t>(0);
        cmd->add_option("--model", *model_path, "dmd model (.romk)")->required();
        cmd->add_option("--step", *step, "snapshot index k >= 0")->required();
        cmd->add_option("--out", *out, "state csv output")->required();
        cmd->callback([&runner, model_path, out, step] {
            runner = [=](const GlobalOpts& g) {
                RunRecorder rec(g, "dmd reconstruct", *out);
                const dmd::DmdModel model = dmd::load_model(*model_path);
                const auto r = dmd::reconstruct(model, *step);
                write_state_csv(*out, r.state);
                rec.summary["inputs"]["model"] = *model_path;
                rec.summary["outputs"]["state"] = *out;
                rec.summary["parameters"]["step"] = *step;
                rec.summary["residuals"]["imag_ratio"] = r.imag_ratio;
                rec.finish();
            };
        });
    }
    {
        auto* cmd = grp->add_subcommand("forecast", "state at continuous time t");
        auto model_path = std::make_shared<std::string>();
        auto out = std::make_shared<std::string>();
        auto time = std::make_shared<double>(0.0);
        cmd->add_option("--model", *model_path, "dmd model (.romk)")->required();
        cmd->add_option("--time", *time, "forecast time t >= 0")->required();
        cmd->add_option("--out", *out, "state csv output")->required();
        cmd->callback([&runner, model_path, out, time] {
            runner = [=](const GlobalOpts& g) {
                RunRecorder rec(g, "dmd forecast", *out);
                const dmd::DmdModel model = dmd::load_model(*model_path);
                const auto f = dmd::forecast(model, *time);
                if (f.excluded_modes > 0)
                    warn(std::to_string(f.excluded_modes) +
                         " zero-eigenvalue modes excluded from the forecast");
                write_state_csv(*out, f.state);
                rec.summary["inputs"]["model"] = *model_path;
                rec.summary["outputs"]["state"] = *out;
                rec.summary["parameters"]["time"] = *time;
                rec.summary["residuals"]["imag_ratio"] = f.imag_ratio;
                rec.summary["residuals"]["excluded_modes"] = f.excluded_modes;
                rec.finish();
            };
        });
    }
    {
        auto* cmd = grp->add_subcommand("spectrum", "eigenvalues, rates and frequencies");
        auto model_path = std::make_shared<std::string>();
        auto out = std::make_shared<std::string>();
        cmd->add_option("--model", *model_path, "dmd model (.romk)")->required();
        cmd->add_option("--out", *out, "spectrum csv output")->required();
        cmd->callback([&runner, model_path, out] {
            runner = [=](const GlobalOpts& g) {
                RunRecorder rec(g, "dmd spectrum", *out);
                const dmd::DmdModel model = dmd::load_model(*model_path);
                std::string body = "eig_re,eig_im,omega_re,omega_im,magnitude,frequency\n";
                for (const auto& row : dmd::spectrum(model)) {
                    body += format_double(row.eigenvalue.real()) + "," +
                            format_double(row.eigenvalue.imag()) + "," +
                            format_double(row.omega.real()) + "," +
                            format_double(row.omega.imag()) + "," +
                            format_double(row.magnitude) + "," + format_double(row.frequency) +
                            "\n";
                }
                write_text_atomic(*out, body);
                rec.summary["inputs"]["model"] = *model_path;
                rec.summary["outputs"]["spectrum"] = *out;
                rec.summary["parameters"]["rank"] = model.rank;
                rec.finish();
            };
        });
    }
}

void add_podi(CLI::App& app, Runner& runner) {
    CLI::App* grp = app.add_subcommand("podi", "pod with parametric interpolation");
    grp->require_subcommand(1);

    {
        auto* cmd = grp->add_subcommand("fit", "fit a podi model from parametric snapshots");
        auto in = std::make_shared<std::string>();
        auto fmt = std::make_shared<std::string>();
        auto out = std::make_shared<std::string>();
        auto rank = std::make_shared<std::size_t>(0);
        auto energy = std::make_shared<double>(1.0);
        auto interp_name = std::make_shared<std::string>("idw");
        auto power = std::make_shared<double>(2.0);
        auto epsilon = std::make_shared<double>(1.0);
        auto lambda = std::make_shared<double>(0.0);
        cmd->add_option("--in", *in, "snapshot dataset with a parameter table")->required();
        cmd->add_option("--format", *fmt, "csv or romk");
        cmd->add_option("--out", *out, "model output (.romk)")->required();
        auto* rank_opt = cmd->add_option("--rank", *rank, "fixed truncation rank");
        auto* energy_opt = cmd->add_option("--energy", *energy, "cumulative energy fraction");
        rank_opt->excludes(energy_opt);
        energy_opt->excludes(rank_opt);
        auto* interp_opt = cmd->add_option("--interp", *interp_name,
                                           "idw | rbf-gaussian | rbf-thin-plate | rbf-multiquadric");
        auto* power_opt = cmd->add_option("--power", *power, "idw exponent");
        auto* eps_opt = cmd->add_option("--epsilon", *epsilon, "rbf shape parameter");
        auto* lambda_opt = cmd->add_option("--lambda", *lambda, "kernel regularization");
        cmd->callback([&runner, in, fmt, out, rank, energy, interp_name, power, epsilon, lambda,
                       rank_opt, energy_opt, interp_opt, power_opt, eps_opt, lambda_opt] {
            runner = [=](const GlobalOpts& g) {
                RunRecorder rec(g, "podi fit", *out);
                const SnapshotSet set = load_snapshots(*in, pick_format(*fmt, *in));
                InterpolatorConfig interp;
                interp.kind = kind_from_name(
                    pick(interp_opt, *interp_name, g.config, "interp", std::string("idw")));
                interp.power = pick(power_opt, *power, g.config, "power", 2.0);
                interp.epsilon = pick(eps_opt, *epsilon, g.config, "epsilon", 1.0);
                interp.regularization = pick(lambda_opt, *lambda, g.config, "lambda", 0.0);
                if (interp.kind == InterpolatorConfig::Kind::RbfThinPlate &&
                    interp.regularization == 0.0)
                    warn("thin-plate kernel without regularization may be singular; "
                         "consider --lambda > 0");
                const RankSpec spec = rank_from_options(rank_opt, *rank, energy_opt, *energy, g.config);
                const podi::PodiModel model = podi::fit(set, spec, interp);
                podi::save_model(model, *out);
                rec.summary["inputs"]["in"] = *in;
                rec.summary["outputs"]["model"] = *out;
                rec.summary["parameters"]["rank_spec"] = rank_spec_name(spec);
                rec.summary["parameters"]["rank"] = model.basis.modes.cols();
                rec.summary["parameters"]["interp"] = kind_name(interp.kind);
                rec.summary["parameters"]["power"] = interp.power;
                rec.summary["parameters"]["epsilon"] = interp.epsilon;
                rec.summary["parameters"]["lambda"] = interp.regularization;
                rec.summary["parameters"]["energy_fraction"] = model.basis.energy_fraction;
                rec.summary["residuals"]["max_training_relative_error"] =
                    podi::training_residual(model, set);
                rec.finish();
            };
        });
    }
    {
        auto* cmd = grp->add_subcommand("eval", "evaluate the surrogate at a parameter point");
        auto model_path = std::make_shared<std::string>();
        auto out = std::make_shared<std::string>();
        auto mu_text = std::make_shared<std::string>();
        cmd->add_option("--model", *model_path, "podi model (.romk)")->required();
        cmd->add_option("--mu", *mu_text, "parameter point, comma separated")->required();
        cmd->add_option("--out", *out, "state csv output")->required();
        cmd->callback([&runner, model_path, out, mu_text] {
            runner = [=](const GlobalOpts& g) {
                RunRecorder rec(g, "podi eval", *out);
                const podi::PodiModel model = podi::load_model(*model_path);
                const std::vector<double> mu = parse_vector(*mu_text);
                const podi::EvalResult r = podi::evaluate(model, mu);
                if (r.outside_train_box)
                    warn("query lies outside the training parameter box (extrapolation)");
                write_state_csv(*out, r.state);
                rec.summary["inputs"]["model"] = *model_path;
                rec.summary["outputs"]["state"] = *out;
                rec.summary["parameters"]["mu"] = mu;
                rec.summary["residuals"]["extrapolated"] = r.outside_train_box;
                rec.finish();
            };
        });
    }
}

asub::DimRule dim_rule_from_options(const CLI::Option* dim_opt, std::size_t dim,
                                    const CLI::Option* gap_opt, const CLI::Option* energy_opt,
                                    double energy) {
    if (dim_opt->count() > 0) return asub::DimRule::fixed(dim);
    if (energy_opt->count() > 0) return asub::DimRule::energy(energy);
    (void)gap_opt;
    return asub::DimRule::gap();
}

void add_asub(CLI::App& app, Runner& runner) {
    CLI::App* grp = app.add_subcommand("asub", "active-subspace parameter reduction");
    grp->require_subcommand(1);

    {
        auto* cmd = grp->add_subcommand("gradients", "estimate gradients from input/output samples");
        auto in = std::make_shared<std::string>();
        auto out = std::make_shared<std::string>();
        auto neighbors = std::make_shared<std::size_t>(0);
        cmd->add_option("--in", *in, "sample csv (parameter columns + value column, header row)")
            ->required();
        cmd->add_option("--neighbors", *neighbors, "regression neighborhood size")->required();
        cmd->add_option("--out", *out, "gradient csv output")->required();
        cmd->callback([&runner, in, out, neighbors] {
            runner = [=](const GlobalOpts& g) {
                RunRecorder rec(g, "asub gradients", *out);
                const asub::SampleTable t = asub::read_sample_csv(*in);
                const auto grads = asub::estimate_gradients(t.points, t.values, *neighbors);
                asub::write_gradient_csv(*out, grads, t.names);
                rec.summary["inputs"]["in"] = *in;
                rec.summary["outputs"]["gradients"] = *out;
                rec.summary["parameters"]["neighbors"] = *neighbors;
                rec.summary["parameters"]["samples"] = grads.size();
                rec.finish();
            };
        });
    }
    {
        auto* cmd = grp->add_subcommand("compute", "gradient covariance eigendecomposition");
        auto in = std::make_shared<std::string>();
        auto prefix = std::make_shared<std::string>();
        auto dim = std::make_shared<std::size_t>(0);
        auto energy = std::make_shared<double>(0.95);
        cmd->add_option("--in", *in, "gradient csv (N point + N gradient columns)")->required();
        cmd->add_option("--out", *prefix, "output prefix")->required();
        auto* dim_opt = cmd->add_option("--dim", *dim, "fixed active dimension");
        auto* gap_opt = cmd->add_flag("--gap", "largest-eigenvalue-gap rule (default)");
        auto* energy_opt = cmd->add_option("--energy", *energy, "eigenvalue energy fraction");
        dim_opt->excludes(gap_opt);
        dim_opt->excludes(energy_opt);
        gap_opt->excludes(energy_opt);
        cmd->callback([&runner, in, prefix, dim, energy, dim_opt, gap_opt, energy_opt] {
            runner = [=](const GlobalOpts& g) {
                RunRecorder rec(g, "asub compute", *prefix);
                const auto grads = asub::read_gradient_csv(*in);
                const Matrix c = asub::covariance(grads);
                asub::ActiveSubspace as = asub::decompose(c);
                as = asub::select_dim(as, dim_rule_from_options(dim_opt, *dim, gap_opt, energy_opt,
                                                                *energy));
                asub::write_eigenvalue_csv(*prefix + "_eigenvalues.csv", as);
                asub::write_eigenvector_csv(*prefix + "_eigenvectors.csv", as);
                rec.summary["inputs"]["in"] = *in;
                rec.summary["outputs"]["eigenvalues"] = *prefix + "_eigenvalues.csv";
                rec.summary["outputs"]["eigenvectors"] = *prefix + "_eigenvectors.csv";
                rec.summary["parameters"]["active_dim"] = as.active_dim;
                rec.summary["residuals"]["eigenvalues"] = as.eigenvalues;
                rec.finish();
            };
        });
    }
    {
        auto* cmd = grp->add_subcommand("project", "project samples onto the active variables");
        auto subspace = std::make_shared<std::string>();
        auto in = std::make_shared<std::string>();
        auto out = std::make_shared<std::string>();
        auto dim = std::make_shared<std::size_t>(1);
        cmd->add_option("--subspace", *subspace, "prefix written by asub compute")->required();
        cmd->add_option("--in", *in, "sample csv")->required();
        cmd->add_option("--dim", *dim, "active dimension k")->required();
        cmd->add_option("--out", *out, "projected csv output")->required();
        cmd->callback([&runner, subspace, in, out, dim] {
            runner = [=](const GlobalOpts& g) {
                RunRecorder rec(g, "asub project", *out);
                asub::ActiveSubspace as = asub::read_subspace_csv(
                    *subspace + "_eigenvalues.csv", *subspace + "_eigenvectors.csv");
                as = asub::select_dim(as, asub::DimRule::fixed(*dim));
                const asub::SampleTable t = asub::read_sample_csv(*in);
                std::string body;
                for (std::size_t j = 0; j < *dim; ++j) body += (j ? ",y" : "y") + std::to_string(j);
                body += "\n";
                std::vector<double> x(t.points.rows());
                for (std::size_t jcol = 0; jcol < t.points.cols(); ++jcol) {
                    for (std::size_t i = 0; i < x.size(); ++i) x[i] = t.points(i, jcol);
                    const Vector y = asub::project(as, x);
                    for (std::size_t i = 0; i < y.size(); ++i)
                        body += (i ? "," : "") + format_double(y[i]);
                    body += "\n";
                }
                write_text_atomic(*out, body);
                rec.summary["inputs"]["in"] = *in;
                rec.summary["inputs"]["subspace"] = *subspace;
                rec.summary["outputs"]["projection"] = *out;
                rec.summary["parameters"]["active_dim"] = *dim;
                rec.finish();
            };
        });
    }
    {
        auto* cmd = grp->add_subcommand("summary", "sufficient-summary-plot table");
        auto subspace = std::make_shared<std::string>();
        auto in = std::make_shared<std::string>();
        auto out = std::make_shared<std::string>();
        auto dim = std::make_shared<std::size_t>(1);
        cmd->add_option("--subspace", *subspace, "prefix written by asub compute")->required();
        cmd->add_option("--in", *in, "sample csv")->required();
        cmd->add_option("--dim", *dim, "active dimension k")->required();
        cmd->add_option("--out", *out, "summary csv output")->required();
        cmd->callback([&runner, subspace, in, out, dim] {
            runner = [=](const GlobalOpts& g) {
                RunRecorder rec(g, "asub summary", *out);
                asub::ActiveSubspace as = asub::read_subspace_csv(
                    *subspace + "_eigenvalues.csv", *subspace + "_eigenvectors.csv");
                as = asub::select_dim(as, asub::DimRule::fixed(*dim));
                const asub::SampleTable t = asub::read_sample_csv(*in);
                const Matrix table = asub::summary_data(as, t.points, t.values);
                asub::write_summary_csv(*out, table);
                rec.summary["inputs"]["in"] = *in;
                rec.summary["inputs"]["subspace"] = *subspace;
                rec.summary["outputs"]["summary"] = *out;
                rec.summary["parameters"]["active_dim"] = *dim;
                rec.finish();
            };
        });
    }
}

void add_morph(CLI::App& app, Runner& runner) {
    CLI::App* grp = app.add_subcommand("morph", "geometry morphing (stl mesh or point csv)");
    grp->require_subcommand(1);

    struct MorphArgs {
        std::string config;
        std::string in;
        std::string out;
        bool weld = false;
        double weld_tol = 1e-9;
    };

    auto add_common = [](CLI::App* cmd, const std::shared_ptr<MorphArgs>& a) {
        cmd->add_option("--morph-config", a->config, "deformation JSON document")->required();
        cmd->add_option("--in", a->in, "geometry input (.stl or .csv with 3 rows)")->required();
        cmd->add_option("--out", a->out, "geometry output")->required();
        cmd->add_flag("--weld", a->weld, "merge coincident stl vertices before deforming");
        cmd->add_option("--weld-tol", a->weld_tol, "welding tolerance (absolute)");
    };

    {
        auto* cmd = grp->add_subcommand("ffd", "free-form deformation over a Bernstein lattice");
        auto a = std::make_shared<MorphArgs>();
        add_common(cmd, a);
        cmd->callback([&runner, a] {
            runner = [a](const GlobalOpts& g) {
                RunRecorder rec(g, "morph ffd", a->out);
                const morph::FfdLattice lat =
                    lattice_from_json(load_json_doc(a->config), a->config);
                const Geometry geo = load_geometry(a->in, a->weld, a->weld_tol);
                std::vector<std::array<std::size_t, 3>> boundary;
                const morph::PointCloud deformed = morph::ffd_deform(lat, geo.cloud, &boundary);
                if (!boundary.empty()) {
                    std::string idx;
                    for (const auto& b : boundary) {
                        if (!idx.empty()) idx += " ";
                        idx += "(" + std::to_string(b[0]) + "," + std::to_string(b[1]) + "," +
                               std::to_string(b[2]) + ")";
                    }
                    warn("displaced boundary control layers break C0 continuity at the lattice "
                         "boundary: " + idx);
                }
                save_geometry(geo, deformed, a->out);
                rec.summary["inputs"]["in"] = a->in;
                rec.summary["inputs"]["morph_config"] = a->config;
                rec.summary["outputs"]["out"] = a->out;
                rec.summary["parameters"]["points"] = deformed.count();
                rec.summary["parameters"]["boundary_controls"] = boundary.size();
                rec.finish();
            };
        });
    }
    {
        auto* cmd = grp->add_subcommand("idw", "inverse-distance-weighted deformation");
        auto a = std::make_shared<MorphArgs>();
        add_common(cmd, a);
        cmd->callback([&runner, a] {
            runner = [a](const GlobalOpts& g) {
                RunRecorder rec(g, "morph idw", a->out);
                const json doc = load_json_doc(a->config);
                morph::PointCloud controls;
                Matrix disp;
                controls_from_json(doc, a->config, controls, disp);
                const double power = doc.value("power", 2.0);
                const Geometry geo = load_geometry(a->in, a->weld, a->weld_tol);
                const morph::PointCloud deformed = morph::idw_deform(controls, disp, geo.cloud, power);
                save_geometry(geo, deformed, a->out);
                rec.summary["inputs"]["in"] = a->in;
                rec.summary["inputs"]["morph_config"] = a->config;
                rec.summary["outputs"]["out"] = a->out;
                rec.summary["parameters"]["power"] = power;
                rec.summary["parameters"]["controls"] = controls.count();
                rec.finish();
            };
        });
    }
    {
        auto* cmd = grp->add_subcommand("rbf", "radial-basis-function deformation");
        auto a = std::make_shared<MorphArgs>();
        add_common(cmd, a);
        cmd->callback([&runner, a] {
            runner = [a](const GlobalOpts& g) {
                RunRecorder rec(g, "morph rbf", a->out);
                const json doc = load_json_doc(a->config);
                morph::PointCloud controls;
                Matrix disp;
                controls_from_json(doc, a->config, controls, disp);
                InterpolatorConfig kernel;
                kernel.kind = kind_from_name(doc.value("kernel", std::string("gaussian")));
                kernel.epsilon = doc.value("epsilon", 1.0);
                kernel.regularization = doc.value("regularization", 0.0);
                const Geometry geo = load_geometry(a->in, a->weld, a->weld_tol);
                const morph::PointCloud deformed = morph::rbf_deform(controls, disp, geo.cloud, kernel);
                save_geometry(geo, deformed, a->out);
                rec.summary["inputs"]["in"] = a->in;
                rec.summary["inputs"]["morph_config"] = a->config;
                rec.summary["outputs"]["out"] = a->out;
                rec.summary["parameters"]["kernel"] = kind_name(kernel.kind);
                rec.summary["parameters"]["epsilon"] = kernel.epsilon;
                rec.summary["parameters"]["lambda"] = kernel.regularization;
                rec.summary["parameters"]["controls"] = controls.count();
                rec.finish();
            };
        });
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"romkit: data-driven reduced order modeling toolkit"};
    app.require_subcommand(1);

    GlobalOpts globals;
    auto* threads_opt = app.add_option("--threads", globals.threads, "cap kernel threads (0 = auto)");
    app.add_option("--config", globals.config_path, "JSON config supplying flag defaults");
    app.add_option("--seed", globals.seed, "seed echoed into the run summary");
    app.add_flag("--verbose", globals.verbose, "chatty diagnostics on stderr");

    Runner runner;
    add_snap(app, runner);
    add_dmd(app, runner);
    add_podi(app, runner);
    add_asub(app, runner);
    add_morph(app, runner);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "romkit: " << e.what() << "\n";
        return 1;
    }

    try {
        globals.config = load_config(globals.config_path);
        if (threads_opt->count() > 0)
            set_threads(globals.threads);
        else if (globals.config.contains("threads"))
            set_threads(globals.config.at("threads").get<int>());
        if (!runner) {
            std::cerr << "romkit: no subcommand selected\n";
            return 1;
        }
        runner(globals);
        return 0;
    } catch (const ConvergenceError& e) {
        std::cerr << "romkit: numerical error: " << e.what() << "\n";
        return 2;
    } catch (const ConditioningError& e) {
        std::cerr << "romkit: numerical error: " << e.what() << "\n";
        return 2;
    } catch (const RankDeficiencyError& e) {
        std::cerr << "romkit: numerical error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "romkit: error: " << e.what() << "\n";
        return 1;
    } catch (const json::exception& e) {
        std::cerr << "romkit: error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "romkit: error: " << e.what() << "\n";
        return 1;
    }
}
