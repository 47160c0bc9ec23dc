#ifndef TACPLUS_CLI_HPP
#define TACPLUS_CLI_HPP

#include <CLI11.hpp>

#include <fstream>
#include <iterator>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "tacplus/amr_model.hpp"
#include "tacplus/datagen.hpp"
#include "tacplus/metrics.hpp"
#include "tacplus/pipeline.hpp"

namespace tacplus {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitCorrupt = 4;

namespace cli_detail {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline std::vector<std::uint8_t> read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open '" + path + "'");
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::string& path, std::span<const std::uint8_t> bytes) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot write '" + path + "'");
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw DataError("write failed for '" + path + "'");
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) out.push_back(cur);
    return out;
}

inline double parse_double(const std::string& s, const char* what) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        throw UsageError(std::string("bad ") + what + " '" + s + "'");
    }
    if (pos != s.size()) throw UsageError(std::string("bad ") + what + " '" + s + "'");
    return v;
}

/// "uniform", "ideal", or a:b[:c...]. A two-entry ratio on a dataset with a
/// different level count is applied at every level gap.
inline EbAllocation parse_ratios(const std::string& s, std::size_t num_levels) {
    if (s.empty() || s == "uniform") return EbAllocation::uniform();
    if (s == "ideal") return EbAllocation::ideal();
    std::vector<double> r;
    for (const auto& part : split(s, ':')) r.push_back(parse_double(part, "ratio"));
    if (r.size() < 2) throw UsageError("--ratios needs at least two entries");
    for (double v : r)
        if (!(v > 0.0)) throw UsageError("--ratios entries must be positive");
    if (r.size() == num_levels) return EbAllocation::explicit_ratios(r);
    if (r.size() == 2) return EbAllocation::per_gap(r[0] / r[1]);
    throw UsageError("--ratios has " + std::to_string(r.size()) + " entries for " +
                     std::to_string(num_levels) + " levels");
}

inline Method parse_method_or_throw(const std::string& s) {
    auto m = parse_method(s);
    if (!m) throw UsageError("unknown method '" + s + "' (tac+|tac|nast|gsp|zf|1d|3d)");
    return *m;
}

inline EbMode parse_eb_mode(const std::string& s) {
    if (s == "abs") return EbMode::Abs;
    if (s == "rel") return EbMode::Rel;
    throw UsageError("--eb-mode must be abs or rel");
}

struct CompressOpts {
    std::string method = "tac+";
    std::string eb_mode = "rel";
    double eb = 1e-3;
    std::string ratios;
    std::size_t block_size = 0;
    double threshold = 0.5;
    bool no_deflate = false;
};

inline void add_compress_opts(CLI::App* sub, CompressOpts& o, bool with_method) {
    if (with_method) sub->add_option("--method", o.method, "tac+|tac|nast|gsp|zf|1d|3d");
    sub->add_option("--eb-mode", o.eb_mode, "abs|rel");
    if (with_method) sub->add_option("--eb", o.eb, "error bound");
    sub->add_option("--ratios", o.ratios, "per-level eb ratios a:b:c, 'ideal' or 'uniform'");
    sub->add_option("--block-size", o.block_size, "unit block size (default: from input)");
    sub->add_option("--threshold", o.threshold, "OpST/AKDTree density threshold");
    sub->add_flag("--no-deflate", o.no_deflate, "skip the DEFLATE stage");
}

inline CompressConfig make_config(const CompressOpts& o, const AMRDataset& ds) {
    CompressConfig cfg;
    cfg.method = parse_method_or_throw(o.method);
    cfg.eb = {parse_eb_mode(o.eb_mode), o.eb};
    cfg.allocation = parse_ratios(o.ratios, ds.levels.size());
    cfg.block_size = o.block_size;
    cfg.threshold = o.threshold;
    cfg.deflate = !o.no_deflate;
    return cfg;
}

inline void print_info(std::ostream& out, const Archive& a, std::size_t total_bytes) {
    const auto geo = archive_geometry(a);
    out << "method: " << method_name(a.method) << '\n';
    out << "value_type: " << (a.value_type == ValueType::F32 ? "f32" : "f64") << '\n';
    out << "levels: " << a.levels.size() << '\n';
    out << "refinement_ratio: " << a.refinement_ratio << '\n';
    out << "archive_bytes: " << total_bytes << '\n';
    for (std::size_t l = 0; l < a.levels.size(); ++l) {
        const auto& rec = a.levels[l];
        AMRLevel shell{static_cast<int>(l), rec.unit_block_size, Array3<double>(rec.dims, 0.0),
                       geo.levels[l].occupancy};
        const std::string p = "level." + std::to_string(l) + ".";
        out << p << "dims: " << rec.dims.nx << 'x' << rec.dims.ny << 'x' << rec.dims.nz << '\n';
        out << p << "unit_block_size: " << rec.unit_block_size << '\n';
        out << p << "strategy: " << strategy_name(rec.strategy) << '\n';
        out << p << "density: " << format_number(density(shell)) << '\n';
        out << p << "eb_abs: " << (rec.stream ? format_number(rec.stream->eb_abs) : "none") << '\n';
        if (uses_subblocks(rec.strategy)) out << p << "subblocks: " << rec.plan.blocks.size() << '\n';
        if (rec.stream) {
            out << p << "codec_mode: " << codec_mode_name(rec.stream->mode) << '\n';
            out << p << "huffman_tables: " << rec.stream->tables.size() << '\n';
            out << p << "unpredictable: " << rec.stream->unpredictable.size() << '\n';
        }
        out << p << "record_bytes: " << serialize_level(rec).size() << '\n';
    }
}

}  // namespace cli_detail

/// Entry point for the tacplus command. Returns the process exit code.
inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    using namespace cli_detail;
    CLI::App app{"TAC+ compressor for tree-based AMR data", "tacplus"};
    app.require_subcommand(1);

    std::string in_path, out_path, config_path;
    CompressOpts copts;
    std::string bench_methods = "tac+,tac,nast,gsp,zf,1d,3d";
    std::string bench_ebs = "1e-4,1e-3,1e-2,1e-1";
    std::string dataset_id;

    auto* gen = app.add_subcommand("gen", "generate a synthetic AMR dataset");
    gen->add_option("--config", config_path, "key=value config file")->required();
    gen->add_option("-o,--output", out_path, "output .amr file")->required();

    auto* comp = app.add_subcommand("compress", "compress an AMR dataset");
    comp->add_option("-i,--input", in_path, "input .amr file")->required();
    comp->add_option("-o,--output", out_path, "output archive")->required();
    add_compress_opts(comp, copts, true);

    auto* decomp = app.add_subcommand("decompress", "decompress an archive");
    decomp->add_option("-i,--input", in_path, "input archive")->required();
    decomp->add_option("-o,--output", out_path, "output .amr file")->required();

    auto* info = app.add_subcommand("info", "describe an archive");
    info->add_option("-i,--input", in_path, "input archive")->required();

    auto* bench = app.add_subcommand("bench", "rate-distortion sweep to CSV");
    bench->add_option("-i,--input", in_path, "input .amr file")->required();
    bench->add_option("--methods", bench_methods, "comma-separated methods");
    bench->add_option("--ebs", bench_ebs, "comma-separated error bounds");
    bench->add_option("--dataset", dataset_id, "dataset id for the CSV (default: input path)");
    bench->add_option("-o,--output", out_path, "output CSV (default: stdout)");
    add_compress_opts(bench, copts, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n' << app.help();
        return kExitUsage;
    }

    try {
        if (*gen) {
            std::ifstream f(config_path);
            if (!f) throw DataError("cannot open '" + config_path + "'");
            const auto ds = generate(parse_gen_config(f));
            write_file(out_path, write_amrc(ds));
        } else if (*comp) {
            const auto ds = read_amrc(read_file(in_path));
            const auto cfg = make_config(copts, ds);
            write_file(out_path, compress_to_bytes(ds, cfg));
        } else if (*decomp) {
            AMRDataset ds;
            {
                const auto bytes = read_file(in_path);
                ds = decompress_from_bytes(bytes);
            }
            write_file(out_path, write_amrc(ds));
        } else if (*info) {
            const auto bytes = read_file(in_path);
            print_info(out, parse_archive(bytes), bytes.size());
        } else if (*bench) {
            const auto ds = read_amrc(read_file(in_path));
            std::vector<Method> methods;
            for (const auto& m : split(bench_methods, ',')) methods.push_back(parse_method_or_throw(m));
            const EbMode mode = parse_eb_mode(copts.eb_mode);
            std::vector<ErrorBound> ebs;
            for (const auto& e : split(bench_ebs, ',')) ebs.push_back({mode, parse_double(e, "error bound")});
            CompressConfig base = make_config(copts, ds);
            const auto points = rd_sweep(ds, methods, ebs, base, dataset_id.empty() ? in_path : dataset_id);
            if (out_path.empty()) {
                write_csv(out, points);
            } else {
                std::ofstream f(out_path);
                if (!f) throw DataError("cannot write '" + out_path + "'");
                write_csv(f, points);
            }
        }
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n' << app.help();
        return kExitUsage;
    } catch (const CorruptStream& e) {
        err << "corrupt archive: " << e.what() << '\n';
        return kExitCorrupt;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitData;
    }
    return kExitOk;
}

}  // namespace tacplus

#endif  // TACPLUS_CLI_HPP
