// SPDX-License-Identifier: Apache-2.0
//
// mimolab: finite-alphabet MIMO link laboratory
// Copyright (C) 2026 The mimolab authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mimolab.hpp"

using namespace mimolab;

namespace
{
    struct Globals
    {
        std::string config;
        std::optional<std::uint64_t> seed;
        std::string out;
        std::string format = "csv";
    };

    struct PayloadArgs
    {
        std::string payload;
        std::string image;
        std::size_t bits = 65536;
    };

    LinkConfig load(const Globals &g)
    {
        LinkConfig cfg = g.config.empty() ? LinkConfig{} : load_config(g.config);
        if (g.seed)
            cfg.seed = *g.seed;
        cfg.validate();
        return cfg;
    }

    Payload load_payload(const PayloadArgs &p, std::uint64_t seed)
    {
        if (!p.image.empty())
            return Payload::from_image(read_ppm(p.image));
        if (!p.payload.empty())
        {
            std::ifstream in(p.payload, std::ios::binary);
            detail::require(in.good(), "cannot open payload " + p.payload);
            const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
            return Payload::from_bytes(bytes);
        }
        return Payload::random(p.bits, seed ^ 0xb17ULL);
    }

    void add_payload_options(CLI::App *cmd, PayloadArgs &p)
    {
        auto *file = cmd->add_option("--payload", p.payload, "raw binary payload file");
        auto *img = cmd->add_option("--image", p.image, "P6 PPM image payload (pixels sent uncompressed)");
        cmd->add_option("--bits", p.bits, "random payload size in bits")->check(CLI::PositiveNumber);
        file->excludes(img);
    }

    void emit(const Globals &g, const std::string &text)
    {
        if (g.out.empty())
            std::cout << text;
        else
            write_atomic(g.out, text);
    }

    void emit_reports(const Globals &g, const std::vector<SimReport> &rs)
    {
        emit(g, g.format == "json" ? reports_to_json(rs).dump(2) + "\n" : reports_to_csv(rs));
    }

    std::vector<RatePoint> read_curve(const std::string &path)
    {
        std::ifstream in(path);
        detail::require(in.good(), "cannot open curve " + path);
        std::vector<RatePoint> pts;
        std::string line;
        while (std::getline(in, line))
        {
            if (line.empty() || line[0] == '#' || line.find_first_not_of(" \t\r") == std::string::npos)
                continue;
            std::replace(line.begin(), line.end(), ',', ' ');
            std::istringstream ls(line);
            RatePoint p;
            if (!(ls >> p.rate >> p.quality))
            {
                if (pts.empty())
                    continue; // header row
                throw InvalidInput("bad curve line in " + path + ": " + line);
            }
            pts.push_back(p);
        }
        return pts;
    }

    std::vector<RVector> uniform_vectors(std::uint64_t seed, std::size_t n, std::size_t d)
    {
        SeededRng rng(seed);
        std::vector<RVector> out(n, RVector(static_cast<Index>(d)));
        for (auto &v : out)
            for (Index i = 0; i < v.size(); ++i)
                v(i) = rng.uniform(-0.9, 0.9);
        return out;
    }
} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"mimolab: finite-alphabet MIMO link laboratory"};
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    app.add_option("--config", g.config, "JSON link configuration")->check(CLI::ExistingFile);
    app.add_option("--seed", g.seed, "override the configuration seed");
    app.add_option("--out", g.out, "output file (written atomically); stdout when omitted");
    app.add_option("--format", g.format, "report format")->check(CLI::IsMember({"csv", "json"}));

    // simulate
    auto *sim = app.add_subcommand("simulate", "run one link simulation");
    PayloadArgs sim_payload;
    std::optional<double> sim_snr;
    std::string sim_received;
    add_payload_options(sim, sim_payload);
    sim->add_option("--snr", sim_snr, "override snr_db");
    sim->add_option("--received", sim_received, "write the received payload (PPM for image payloads)");

    // sweep
    auto *swp = app.add_subcommand("sweep", "sweep SNR or CBR");
    PayloadArgs swp_payload;
    std::string swp_axis = "snr";
    std::vector<double> swp_values;
    add_payload_options(swp, swp_payload);
    swp->add_option("--axis", swp_axis, "sweep axis")->check(CLI::IsMember({"snr", "cbr"}));
    swp->add_option("--values", swp_values, "axis values, comma separated")->delimiter(',')->required();

    // train-pcen
    auto *tp = app.add_subcommand("train-pcen", "train PEN step sizes and damping on a Rayleigh ensemble");
    int tp_real = 200;
    TrainOptions tp_opts;
    tp->add_option("--realizations", tp_real, "ensemble size")->check(CLI::PositiveNumber);
    tp->add_option("--block-len", tp_opts.block_len, "channel uses per training block")->check(CLI::PositiveNumber);
    tp->add_option("--rounds", tp_opts.max_rounds, "maximum outer rounds")->check(CLI::NonNegativeNumber);
    tp->add_flag("--straight-through", tp_opts.straight_through, "gradient steps with the projection treated as identity");

    // train-proxy
    auto *tx = app.add_subcommand("train-proxy", "fit a surrogate to a toy pipeline and train a linear preprocessor through it");
    std::string tx_pipe = "quantizer";
    std::size_t tx_dim = 16, tx_samples = 256;
    int tx_bits = 3;
    SurrogateTrainOptions tx_sopts;
    EndToEndOptions tx_eopts;
    tx->add_option("--pipeline", tx_pipe, "toy pipeline")->check(CLI::IsMember({"identity", "quantizer", "link"}));
    tx->add_option("--dim", tx_dim, "vector dimension")->check(CLI::PositiveNumber);
    tx->add_option("--quant-bits", tx_bits, "quantizer bits")->check(CLI::Range(1, 12));
    tx->add_option("--samples", tx_samples, "training vectors")->check(CLI::PositiveNumber);
    tx->add_option("--epochs", tx_sopts.epochs, "surrogate epochs");
    tx->add_option("--e2e-epochs", tx_eopts.epochs, "preprocessor epochs");

    // bd
    auto *bd = app.add_subcommand("bd", "Bjontegaard deltas between two rate-quality curves");
    std::string bd_a, bd_b;
    bd->add_option("--a", bd_a, "reference curve (rate,quality per line)")->required()->check(CLI::ExistingFile);
    bd->add_option("--b", bd_b, "test curve")->required()->check(CLI::ExistingFile);

    // selftest
    auto *st = app.add_subcommand("selftest", "run the full pipeline twice and compare reports");

    CLI11_PARSE(app, argc, argv);

    try
    {
        if (sim->parsed())
        {
            LinkConfig cfg = load(g);
            if (sim_snr)
                cfg.snr_db = *sim_snr;
            const Payload payload = load_payload(sim_payload, cfg.seed);
            const LinkRun run = run_link(cfg, payload);
            if (!sim_received.empty())
            {
                std::ostringstream os;
                if (run.image)
                    write_ppm(os, *run.image);
                else
                {
                    const auto bytes = bits_to_bytes(run.received);
                    os.write(reinterpret_cast<const char *>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
                }
                write_atomic(sim_received, os.str());
            }
            emit_reports(g, {run.report});
        }
        else if (swp->parsed())
        {
            const LinkConfig cfg = load(g);
            const Payload payload = load_payload(swp_payload, cfg.seed);
            emit_reports(g, sweep(cfg, swp_axis == "snr" ? SweepAxis::snr_db : SweepAxis::cbr, swp_values, payload));
        }
        else if (tp->parsed())
        {
            const LinkConfig cfg = load(g);
            const Constellation c = make_constellation(cfg.modulation);
            SeededRng rng(cfg.seed);
            std::vector<ChannelRealization> ens;
            for (int i = 0; i < tp_real; ++i)
            {
                SeededRng r = rng.split(static_cast<std::uint64_t>(i));
                ens.push_back(sample_rayleigh(cfg, r));
            }
            tp_opts.t_iters = cfg.pcen.t_iters;
            tp_opts.seed = cfg.seed;
            const TrainResult res = train_pcen(ens, cfg, c, tp_opts);
            std::cerr << "initial " << res.initial_loss << " final " << res.final_loss << " baseline " << res.baseline_loss
                      << " rounds " << res.rounds << (res.converged ? " converged" : " not converged") << "\n";
            emit(g, pcen_to_json(res.params).dump(2) + "\n");
        }
        else if (tx->parsed())
        {
            const LinkConfig cfg = load(g);
            const ToyPipeline pipe = tx_pipe == "identity" ? identity_pipeline(tx_dim)
                                     : tx_pipe == "link"   ? link_pipeline(tx_dim, tx_bits, cfg.snr_db, cfg.seed)
                                                           : quantizer_pipeline(tx_dim, tx_bits);
            tx_sopts.seed = cfg.seed;
            tx_eopts.seed = cfg.seed;
            const auto train = uniform_vectors(cfg.seed, tx_samples, tx_dim);
            const auto held = uniform_vectors(cfg.seed + 1, std::max<std::size_t>(tx_samples / 2, 1), tx_dim);
            const SurrogateFit fit = train_surrogate(pipe, train, tx_sopts);
            const auto targets = pipeline_targets(pipe, held);
            const Surrogate init = Surrogate::random(tx_dim, tx_sopts.width_factor * tx_dim, SeededRng(tx_sopts.seed).split(0).next_u64());
            const EndToEndResult e2e = toy_end_to_end_train(pipe, fit.surrogate, train, tx_eopts);
            nlohmann::json j;
            j["pipeline"] = tx_pipe;
            j["heldout_initial"] = surrogate_loss(init, held, targets);
            j["heldout_final"] = surrogate_loss(fit.surrogate, held, targets);
            j["composite_initial"] = e2e.initial.total;
            j["composite_final"] = e2e.final_terms.total;
            j["surrogate"] = surrogate_to_json(fit.surrogate);
            j["preprocessor"] = preprocessor_to_json(e2e.prep);
            std::cerr << "surrogate held-out " << j["heldout_initial"].get<double>() << " -> " << j["heldout_final"].get<double>()
                      << ", composite " << e2e.initial.total << " -> " << e2e.final_terms.total << "\n";
            emit(g, j.dump(2) + "\n");
        }
        else if (bd->parsed())
        {
            const BdResult r = bd_metric(read_curve(bd_a), read_curve(bd_b));
            std::ostringstream os;
            os << std::setprecision(10);
            if (g.format == "json")
                os << nlohmann::json{{"bd_rate_percent", r.bd_rate_percent}, {"bd_quality", r.bd_quality}}.dump(2) << "\n";
            else
                os << "bd_rate_percent,bd_quality\n" << r.bd_rate_percent << ',' << r.bd_quality << "\n";
            emit(g, os.str());
        }
        else if (st->parsed())
        {
            const std::uint64_t seed = g.seed.value_or(g.config.empty() ? 1 : load_config(g.config).seed);
            const SelftestResult r = selftest(seed);
            if (r.identical)
            {
                std::cout << "selftest PASS: two runs with seed " << seed << " produced identical reports\n";
                return 0;
            }
            std::cout << "selftest FAIL: " << r.detail << "\n" << r.first << "\n" << r.second << "\n";
            return 1;
        }
    }
    catch (const StageError &e)
    {
        std::cerr << "error in stage " << e.stage << ": " << e.what() << "\n";
        return 2;
    }
    catch (const std::exception &e)
    {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
