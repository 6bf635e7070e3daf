// Command-line driver: generate traces, build reuse distributions, evaluate
// the analytical model, and compute data-movement-distance reports.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "dmd/dmd.hpp"
#include "dmd/kernels.hpp"
#include "dmd/rmm_model.hpp"
#include "dmd/stackdist.hpp"
#include "dmd/trace_io.hpp"

using namespace dmd;

namespace {

std::string fmt6(double v) {
    char buf[64];
    snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::filesystem::path out_path(const std::string& name) {
    const char* dir = std::getenv("DMD_OUT_DIR");
    if (dir && *dir) {
        std::filesystem::create_directories(dir);
        return std::filesystem::path(dir) / name;
    }
    return name;
}

void write_file(const std::filesystem::path& p, const std::string& body) {
    std::ofstream os(p);
    if (!os) throw std::runtime_error("cannot write " + p.string());
    os << body;
}

struct KernelArgs {
    std::string kernel = "rmm";
    uint32_t n = 8;
    uint32_t tile = 0;
    bool managed = false;
    std::string semantics = "accum-in-register";

    void attach(CLI::App* cmd) {
        cmd->add_option("--kernel", kernel,
                        "naive|tiled|rmm|rmm_managed|strassen|strassen_managed")
            ->capture_default_str();
        cmd->add_option("--n", n, "matrix dimension (power of two)")->capture_default_str();
        cmd->add_option("--tile", tile, "tile dimension (tiled kernel)");
        cmd->add_flag("--managed", managed, "use the temporary-reclaiming variant");
        cmd->add_option("--semantics", semantics, "accum-in-register|accum-in-memory");
    }

    Kernel resolved_kernel() const {
        Kernel k = kernel_from_name(kernel);
        if (managed) {
            if (k == Kernel::rmm) k = Kernel::rmm_managed;
            else if (k == Kernel::strassen) k = Kernel::strassen_managed;
            else if (!kernel_is_managed(k))
                throw std::invalid_argument("--managed applies to rmm/strassen only");
        }
        return k;
    }
    TraceSemantics resolved_semantics() const {
        TraceSemantics s;
        if (semantics == "accum-in-memory") s.accumulator_in_register = false;
        else if (semantics != "accum-in-register")
            throw std::invalid_argument("unknown --semantics value: " + semantics);
        return s;
    }
    MemoryTrace make() const {
        Kernel k = resolved_kernel();
        if (k == Kernel::tiled && tile == 0)
            throw std::invalid_argument("tiled kernel needs --tile");
        return make_trace(k, n, tile, resolved_semantics());
    }
};

struct CostArgs {
    std::string cost = "sqrt";
    std::string cost_file;
    std::string cold = "exclude";

    void attach(CLI::App* cmd) {
        cmd->add_option("--cost", cost, "sqrt|staircase")->capture_default_str();
        cmd->add_option("--cost-file", cost_file, "staircase JSON: [{capacity,latency},...]");
        cmd->add_option("--cold", cold, "exclude|charge")->capture_default_str();
    }
    CostModel model() const {
        if (cost == "sqrt") return CostModel::sqrt_cost();
        if (cost == "staircase") {
            if (cost_file.empty())
                throw std::invalid_argument("staircase cost needs --cost-file");
            return load_staircase(cost_file);
        }
        throw std::invalid_argument("unknown --cost value: " + cost);
    }
    ColdPolicy policy() const {
        if (cold == "exclude") return ColdPolicy::exclude;
        if (cold == "charge") return ColdPolicy::charge_footprint;
        throw std::invalid_argument("unknown --cold value: " + cold);
    }
};

bool parse_range(const std::string& text, uint32_t& lo, uint32_t& hi) {
    auto dots = text.find("..");
    if (dots == std::string::npos) return false;
    lo = uint32_t(std::stoul(text.substr(0, dots)));
    hi = uint32_t(std::stoul(text.substr(dots + 2)));
    return lo >= 1 && hi >= lo;
}

DmdReport report_for_trace(const MemoryTrace& t, const CostModel& cost, ColdPolicy policy) {
    auto dist = reuse_histogram(t);
    return make_report(kernel_name(t.kernel), t.n, t.tile, dist, footprint(t).total_distinct,
                       cost, policy);
}

int cmd_trace(const KernelArgs& ka, const std::string& out, bool binary) {
    MemoryTrace t = ka.make();
    auto path = out_path(out.empty() ? std::string("trace.") + kernel_name(t.kernel) + "." +
                                           std::to_string(t.n) + (binary ? ".bin" : ".txt")
                                     : out);
    save_trace(t, path.string(), binary);
    auto fp = footprint(t);
    std::cout << "kernel " << kernel_name(t.kernel) << " n " << t.n;
    if (t.kernel == Kernel::tiled) std::cout << " tile " << t.tile;
    std::cout << "\nevents " << t.size() << "\nfootprint " << fp.total_distinct << " peak "
              << fp.peak_live << "\nwrote " << path.string() << "\n";
    return 0;
}

int cmd_rdd(const KernelArgs& ka, const std::string& trace_file, bool oracle,
            const std::string& out, const std::string& format, const std::string& mrc_out,
            const std::string& sizes_text) {
    MemoryTrace t = trace_file.empty() ? ka.make() : load_trace(trace_file);
    ReuseDistribution dist = oracle ? reuse_histogram_naive(t) : reuse_histogram(t);

    std::string body = format == "json" ? distribution_json(dist) : distribution_csv(dist);
    if (out.empty()) {
        std::cout << body;
    } else {
        auto p = out_path(out);
        write_file(p, body);
        std::cout << "wrote " << p.string() << "\n";
    }
    if (!mrc_out.empty()) {
        std::vector<uint64_t> sizes;
        if (!sizes_text.empty()) {
            std::istringstream is(sizes_text);
            std::string tok;
            while (std::getline(is, tok, ',')) sizes.push_back(std::stoull(tok));
        } else {
            for (uint64_t c = 1; c <= std::max<uint64_t>(dist.max_distance(), 1); c *= 2)
                sizes.push_back(c);
        }
        auto p = out_path(mrc_out);
        write_file(p, mrc_csv(miss_ratio_curve(dist, sizes)));
        std::cout << "wrote " << p.string() << "\n";
    }
    return 0;
}

int cmd_model(uint32_t n, const std::string& out, const std::string& format) {
    auto dist = rmm_model::compute_rmm_rdd(n);
    std::string body = format == "json" ? distribution_json(dist) : distribution_csv(dist);
    if (out.empty()) {
        std::cout << body;
    } else {
        auto p = out_path(out);
        write_file(p, body);
        std::cout << "wrote " << p.string() << "\n";
    }
    return 0;
}

int cmd_verify(uint32_t n) {
    auto rep = rmm_model::verify_model(n);
    std::cout << rep.describe();
    return rep.equal ? 0 : 1;
}

int cmd_dmd(const KernelArgs& ka, const CostArgs& ca, const std::string& save_trace_path,
            bool binary) {
    MemoryTrace t = ka.make();
    if (!save_trace_path.empty()) save_trace(t, out_path(save_trace_path).string(), binary);
    auto rep = report_for_trace(t, ca.model(), ca.policy());
    attach_reference_bounds(rep);
    std::cout << rep.json() << "\n";
    if (rep.cost_kind == "sqrt" && rep.cold_policy == ColdPolicy::exclude)
        std::cout << "bounds_check " << (dmd_bounds_check(rep) ? "pass" : "fail") << "\n";
    return 0;
}

int cmd_sweep(const std::string& kernel, const std::string& range, uint32_t tile,
              const CostArgs& ca, const std::string& out) {
    uint32_t lo = 0, hi = 0;
    if (!parse_range(range, lo, hi))
        throw std::invalid_argument("range must look like 16..256");
    Kernel k = kernel_from_name(kernel);
    CostModel cost = ca.model();
    ColdPolicy policy = ca.policy();

    std::vector<std::pair<double, double>> samples;
    std::ostringstream csv;
    csv << "kernel,n,dmd,exponent_fit_so_far\n";
    for (uint32_t n = lo; n <= hi; n *= 2) {
        auto t = make_trace(k, n, tile);
        auto rep = report_for_trace(t, cost, policy);
        samples.emplace_back(double(n), rep.dmd);
        std::string so_far;
        if (samples.size() >= 4) so_far = fmt6(fit_exponent(samples).exponent);
        csv << kernel << "," << n << "," << fmt6(rep.dmd) << "," << so_far << "\n";
        std::cout << "n=" << n << " dmd=" << fmt6(rep.dmd) << "\n";
    }
    if (samples.size() < 4)
        throw std::invalid_argument("sweep needs at least 4 sizes to fit an exponent");
    auto fit = fit_exponent(samples);
    std::cout << "exponent " << fmt6(fit.exponent) << " coefficient " << fmt6(fit.coefficient)
              << " residual " << fmt6(fit.residual) << "\n";
    if (!out.empty()) {
        auto p = out_path(out);
        write_file(p, csv.str());
        std::cout << "wrote " << p.string() << "\n";
    }
    return 0;
}

int cmd_compare(uint32_t n, const CostArgs& ca, const std::string& out) {
    CostModel cost = ca.model();
    ColdPolicy policy = ca.policy();
    struct Row {
        std::string name;
        double dmd;
        std::string bound;
    };
    std::vector<Row> rows;
    auto add = [&](Kernel k, uint32_t tile, std::string bound) {
        auto rep = report_for_trace(make_trace(k, n, tile), cost, policy);
        std::string name = kernel_name(k);
        if (k == Kernel::tiled) name += "(d=" + std::to_string(tile) + ")";
        rows.push_back({name, rep.dmd, std::move(bound)});
    };
    add(Kernel::naive, 0, "~ n^4");
    add(Kernel::tiled, std::max(2u, n / 8), "within [n^4/d + n^3 d, 2sqrt3 n^4/d + sqrt2 n^3 d]");
    add(Kernel::rmm, 0, "~ c n^3.5");
    add(Kernel::rmm_managed, 0, "< 11.85 n^(10/3)");
    add(Kernel::strassen, 0, "~ c n^3.40");
    add(Kernel::strassen_managed, 0, "~ c n^3.2");

    std::sort(rows.begin(), rows.end(), [](auto& a, auto& b) { return a.dmd > b.dmd; });
    std::ostringstream csv;
    csv << "kernel,n,dmd\n";
    std::cout << "DMD ranking at n=" << n << " (largest first):\n";
    for (auto& r : rows) {
        std::cout << "  " << r.name << "  dmd=" << fmt6(r.dmd) << "  [" << r.bound << "]\n";
        csv << r.name << "," << n << "," << fmt6(r.dmd) << "\n";
    }
    if (!out.empty()) {
        auto p = out_path(out);
        write_file(p, csv.str());
        std::cout << "wrote " << p.string() << "\n";
    }
    return 0;
}

int cmd_latency(const std::string& cost_file, uint64_t max_pos, const std::string& out,
                bool gnuplot) {
    CostModel stairs = load_staircase(cost_file);
    auto curve = latency_curve(stairs, max_pos);
    std::ostringstream csv;
    csv << "position,staircase,sqrt\n";
    for (auto& [p, c] : curve)
        csv << p << "," << fmt6(c) << "," << fmt6(std::sqrt(double(p))) << "\n";
    auto path = out_path(out.empty() ? "latency.csv" : out);
    write_file(path, csv.str());
    std::cout << "wrote " << path.string() << "\n";
    if (gnuplot) {
        std::ostringstream gp;
        gp << "set datafile separator ','\nset logscale xy\n"
           << "set xlabel 'stack position'\nset ylabel 'access cost'\n"
           << "plot '" << path.string() << "' using 1:2 with steps title 'staircase', \\\n"
           << "     '" << path.string() << "' using 1:3 with lines title 'sqrt(x)'\n";
        std::filesystem::path gpath = path.string() + ".gp";
        write_file(gpath, gp.str());
        std::cout << "wrote " << gpath.string() << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"data movement distance toolkit for matrix-multiplication kernels"};
    app.require_subcommand(1);

    KernelArgs trace_ka, rdd_ka, dmd_ka;
    CostArgs dmd_ca, sweep_ca, compare_ca;

    auto* sc_trace = app.add_subcommand("trace", "generate a memory trace file");
    trace_ka.attach(sc_trace);
    std::string trace_out;
    bool trace_bin = false;
    sc_trace->add_option("--out", trace_out, "output path");
    sc_trace->add_flag("--binary", trace_bin, "write the compact binary form");

    auto* sc_rdd = app.add_subcommand("rdd", "reuse distance distribution of a trace");
    rdd_ka.attach(sc_rdd);
    std::string rdd_trace_file, rdd_out, rdd_format = "csv", rdd_mrc, rdd_sizes;
    bool rdd_oracle = false;
    sc_rdd->add_option("--trace", rdd_trace_file, "analyze a saved trace file instead");
    sc_rdd->add_flag("--oracle", rdd_oracle, "use the quadratic reference path");
    sc_rdd->add_option("--out", rdd_out, "output path (default stdout)");
    sc_rdd->add_option("--format", rdd_format, "csv|json")->capture_default_str();
    sc_rdd->add_option("--mrc", rdd_mrc, "also write a miss ratio curve CSV");
    sc_rdd->add_option("--sizes", rdd_sizes, "comma-separated cache sizes for --mrc");

    auto* sc_model = app.add_subcommand("model", "analytical rmm distribution (no trace)");
    uint32_t model_n = 8;
    std::string model_out, model_format = "csv";
    sc_model->add_option("--n", model_n, "matrix dimension (power of two)")->required();
    sc_model->add_option("--out", model_out, "output path (default stdout)");
    sc_model->add_option("--format", model_format, "csv|json")->capture_default_str();

    auto* sc_verify = app.add_subcommand("verify", "model vs instrumented-trace oracle");
    uint32_t verify_n = 8;
    sc_verify->add_option("--n", verify_n, "matrix dimension (power of two)")->required();

    auto* sc_dmd = app.add_subcommand("dmd", "data movement distance report for one config");
    dmd_ka.attach(sc_dmd);
    dmd_ca.attach(sc_dmd);
    std::string dmd_save;
    bool dmd_bin = false;
    sc_dmd->add_option("--save-trace", dmd_save, "also persist the generated trace");
    sc_dmd->add_flag("--binary", dmd_bin, "binary trace format for --save-trace");

    auto* sc_sweep = app.add_subcommand("sweep", "dmd across an n range with exponent fit");
    std::string sweep_kernel = "rmm", sweep_range = "16..128", sweep_out;
    uint32_t sweep_tile = 0;
    sc_sweep->add_option("--kernel", sweep_kernel, "kernel name")->capture_default_str();
    sc_sweep->add_option("--n", sweep_range, "range lo..hi, doubling")->capture_default_str();
    sc_sweep->add_option("--tile", sweep_tile, "tile dimension (tiled kernel)");
    sweep_ca.attach(sc_sweep);
    sc_sweep->add_option("--out", sweep_out, "CSV output path");

    auto* sc_compare = app.add_subcommand("compare", "all six kernels at one size");
    uint32_t compare_n = 32;
    std::string compare_out;
    sc_compare->add_option("--n", compare_n, "matrix dimension")->required();
    compare_ca.attach(sc_compare);
    sc_compare->add_option("--out", compare_out, "CSV output path");

    auto* sc_lat = app.add_subcommand("latency", "staircase vs sqrt cost curve data");
    std::string lat_file, lat_out;
    uint64_t lat_max = 1 << 20;
    bool lat_gnuplot = false;
    sc_lat->add_option("--cost-file", lat_file, "staircase JSON")->required();
    sc_lat->add_option("--max", lat_max, "largest stack position")->capture_default_str();
    sc_lat->add_option("--out", lat_out, "CSV output path");
    sc_lat->add_flag("--gnuplot", lat_gnuplot, "emit a companion gnuplot script");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
        app.exit(e);
        return 2;
    }

    try {
        if (sc_trace->parsed()) return cmd_trace(trace_ka, trace_out, trace_bin);
        if (sc_rdd->parsed())
            return cmd_rdd(rdd_ka, rdd_trace_file, rdd_oracle, rdd_out, rdd_format, rdd_mrc,
                           rdd_sizes);
        if (sc_model->parsed()) return cmd_model(model_n, model_out, model_format);
        if (sc_verify->parsed()) return cmd_verify(verify_n);
        if (sc_dmd->parsed()) return cmd_dmd(dmd_ka, dmd_ca, dmd_save, dmd_bin);
        if (sc_sweep->parsed())
            return cmd_sweep(sweep_kernel, sweep_range, sweep_tile, sweep_ca, sweep_out);
        if (sc_compare->parsed()) return cmd_compare(compare_n, compare_ca, compare_out);
        if (sc_lat->parsed()) return cmd_latency(lat_file, lat_max, lat_out, lat_gnuplot);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
