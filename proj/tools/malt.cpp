// malt: measure the adversarial attackability of multi-label classifiers and
// train transferability-regularized ones. Subcommands: gen-data, train,
// attack, sae, evaluate, sweep.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "malt/attack.hpp"
#include "malt/dataset.hpp"
#include "malt/errors.hpp"
#include "malt/experiment.hpp"
#include "malt/format.hpp"
#include "malt/metrics.hpp"
#include "malt/model.hpp"
#include "malt/sae.hpp"
#include "malt/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Relative output paths are redirected under MALT_OUT_DIR when it is set.
std::string resolveOut(const std::string& path) {
    fs::path p(path);
    if (const char* env = std::getenv("MALT_OUT_DIR"); env && *env && p.is_relative())
        p = fs::path(env) / p;
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    return p.string();
}

std::ofstream openOut(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output file: " + path);
    return out;
}

struct TrainFlags {
    std::string arch = "linear";
    std::size_t hidden = 16;
    double initScale = 0.1;
    std::string reg = "none";
    double lambda = 0.0;
    double alpha = malt::kDefaultAlpha;
    std::size_t epochs = 100;
    std::size_t batch = 32;
    double lr = 0.1;
    double momentum = 0.0;
    double lrDecay = 1.0;
    std::size_t patience = 0;
    std::uint64_t seed = 0;

    void attach(CLI::App* cmd, bool withReg = true) {
        cmd->add_option("--arch", arch, "Model architecture: linear or mlp")
            ->check(CLI::IsMember({"linear", "mlp"}));
        cmd->add_option("--hidden", hidden, "MLP hidden width");
        cmd->add_option("--init-scale", initScale, "MLP init weight scale");
        if (withReg) {
            cmd->add_option("--reg", reg, "Regularizer")
                ->check(CLI::IsMember(
                    {"none", "l2", "nuclear", "arm-primal", "arm-single", "arm-sae"}));
            cmd->add_option("--lambda", lambda, "Regularization weight");
        }
        cmd->add_option("--alpha", alpha, "Denominator clamp floor");
        cmd->add_option("--epochs", epochs, "Training epochs");
        cmd->add_option("--batch", batch, "Minibatch size");
        cmd->add_option("--lr", lr, "Learning rate");
        cmd->add_option("--momentum", momentum, "SGD momentum");
        cmd->add_option("--lr-decay", lrDecay, "Per-epoch learning rate multiplier");
        cmd->add_option("--patience", patience,
                        "Early-stop patience on validation Micro-F1 (0 disables)");
        cmd->add_option("--seed", seed, "Random seed");
    }

    malt::TrainSpec spec() const {
        malt::TrainSpec s;
        s.regularizer = malt::regularizerFromName(reg);
        s.lambda = lambda;
        s.alpha = alpha;
        s.epochs = epochs;
        s.batchSize = batch;
        s.learningRate = lr;
        s.momentum = momentum;
        s.lrDecay = lrDecay;
        s.patience = patience;
        s.seed = seed;
        return s;
    }

    malt::ModelInit init() const {
        malt::ModelInit i;
        i.kind = arch == "mlp" ? malt::ModelKind::Mlp : malt::ModelKind::Linear;
        i.hidden = hidden;
        i.initScale = initScale;
        return i;
    }
};

json reportJson(const malt::EvalReport& report) {
    return {{"microF1", report.microF1},
            {"macroF1", report.macroF1},
            {"perLabelF1", report.perLabelF1},
            {"support", report.support}};
}

void addGenData(CLI::App& app) {
    auto* cmd = app.add_subcommand("gen-data", "Generate a synthetic correlated-label dataset");
    auto n = std::make_shared<std::size_t>(1000);
    auto d = std::make_shared<std::size_t>(20);
    auto m = std::make_shared<std::size_t>(4);
    auto rho = std::make_shared<double>(0.5);
    auto margin = std::make_shared<double>(0.1);
    auto noise = std::make_shared<double>(0.05);
    auto seed = std::make_shared<std::uint64_t>(0);
    auto out = std::make_shared<std::string>("dataset.csv");
    auto clip = std::make_shared<std::vector<double>>();
    auto truthOut = std::make_shared<std::string>();
    cmd->add_option("--n", *n, "Instances");
    cmd->add_option("--d", *d, "Feature dimension");
    cmd->add_option("--m", *m, "Labels");
    cmd->add_option("--rho", *rho, "Target pairwise cosine of ground-truth directions");
    cmd->add_option("--margin", *margin, "Enforced score margin before noise");
    cmd->add_option("--noise", *noise, "Per-label flip probability");
    cmd->add_option("--seed", *seed, "Random seed");
    cmd->add_option("--out", *out, "Output CSV path (sidecar written next to it)");
    cmd->add_option("--clip", *clip, "Declare a clip box: lo hi")->expected(2);
    cmd->add_option("--truth-out", *truthOut, "Also save the ground-truth linear model");
    cmd->callback([=]() {
        malt::SynthSpec spec;
        spec.n = *n;
        spec.d = *d;
        spec.m = *m;
        spec.rho = *rho;
        spec.margin = *margin;
        spec.labelNoise = *noise;
        spec.seed = *seed;
        malt::Generated gen = malt::generate(spec);
        if (!clip->empty()) {
            if (!((*clip)[0] < (*clip)[1]))
                throw std::invalid_argument("clip box needs lo < hi");
            gen.dataset.clipBox = malt::ClipBox{(*clip)[0], (*clip)[1]};
        }
        malt::DatasetMeta meta{spec.seed, spec.rho, spec.margin, spec.labelNoise};
        const std::string csv = resolveOut(*out);
        malt::saveDatasetFiles(gen.dataset, meta, csv);
        if (!truthOut->empty())
            malt::saveModel(malt::LinearModel(gen.groundTruthW), resolveOut(*truthOut));
        std::cout << "gen-data: wrote " << csv << " n=" << spec.n << " d=" << spec.d
                  << " m=" << spec.m << " rho=" << spec.rho << " seed=" << spec.seed
                  << "\n";
    });
}

void addTrain(CLI::App& app) {
    auto* cmd = app.add_subcommand("train", "Train a multi-label classifier");
    auto data = std::make_shared<std::string>();
    auto modelOut = std::make_shared<std::string>("model.json");
    auto traceOut = std::make_shared<std::string>("trace.csv");
    auto flags = std::make_shared<TrainFlags>();
    cmd->add_option("--data", *data, "Dataset CSV (with sidecar)")->required();
    cmd->add_option("--model-out", *modelOut, "Model JSON output");
    cmd->add_option("--trace-out", *traceOut, "Per-epoch trace CSV output");
    flags->attach(cmd);
    cmd->callback([=]() {
        malt::Dataset dataset = malt::loadDatasetFiles(*data);
        malt::TrainResult result = malt::train(dataset, flags->init(), flags->spec());
        malt::saveModel(result.model, resolveOut(*modelOut));
        malt::writeTraceCsv(result.trace, resolveOut(*traceOut));
        std::cout << "train: best_val_micro_f1=" << malt::formatDouble17(result.bestValMicroF1)
                  << " best_epoch=" << result.bestEpoch
                  << " epochs_run=" << result.trace.records.size() << "\n";
    });
}

void addAttack(CLI::App& app) {
    auto* cmd = app.add_subcommand("attack", "Run evasion attacks over a split");
    auto data = std::make_shared<std::string>();
    auto modelPath = std::make_shared<std::string>();
    auto split = std::make_shared<std::string>("test");
    auto epsilon = std::make_shared<double>(0.0);
    auto margin = std::make_shared<double>(malt::kDefaultFlipMargin);
    auto exact = std::make_shared<bool>(false);
    auto pgdSteps = std::make_shared<int>(200);
    auto pgdStep = std::make_shared<double>(0.0);
    auto out = std::make_shared<std::string>("outcomes.jsonl");
    auto summaryOut = std::make_shared<std::string>();
    cmd->add_option("--data", *data, "Dataset CSV (with sidecar)")->required();
    cmd->add_option("--model", *modelPath, "Model JSON")->required();
    cmd->add_option("--split", *split, "Split to attack")
        ->check(CLI::IsMember({"train", "val", "test"}));
    cmd->add_option("--epsilon", *epsilon, "L2 budget")->required();
    cmd->add_option("--margin", *margin, "Strict flip margin");
    cmd->add_flag("--exact", *exact, "Exact subset enumeration (linear, m <= 12)");
    cmd->add_option("--pgd-steps", *pgdSteps, "PGD steps for MLP attacks");
    cmd->add_option("--pgd-step", *pgdStep, "PGD step size (0 = epsilon/20)");
    cmd->add_option("--out", *out, "Outcomes JSONL output");
    cmd->add_option("--summary-out", *summaryOut, "Summary JSON output");
    cmd->callback([=]() {
        malt::Dataset dataset = malt::loadDatasetFiles(*data);
        malt::Model model = malt::loadModel(*modelPath);
        const auto& rows = dataset.split(*split);
        if (rows.empty()) throw std::invalid_argument("attack: empty split");

        malt::BudgetSpec budget;
        budget.epsilon = *epsilon;
        budget.clip = dataset.clipBox;
        malt::PgdOptions pgd{*pgdSteps, *pgdStep};

        const malt::LinearModel* lin = std::get_if<malt::LinearModel>(&model);
        if (*exact && lin == nullptr)
            throw std::invalid_argument("attack --exact requires a linear model");

        std::ofstream jsonl = openOut(resolveOut(*out));
        double caSum = 0.0, cstarSum = 0.0;
        for (std::size_t idx : rows) {
            auto x = dataset.X.row(idx);
            auto y = dataset.Y.row(idx);
            json rec;
            rec["schemaVersion"] = 1;
            rec["index"] = idx;
            if (*exact) {
                malt::ExactAttackability ex =
                    malt::exactAttackability(*lin, x, y, budget, *margin);
                rec["cstar"] = ex.cStar;
                rec["rnorm"] = ex.witness.rnorm;
                rec["flipped"] = ex.witness.flipped;
                cstarSum += ex.cStar;
            } else {
                malt::GreedyAttackability greedy =
                    malt::greedyAttackability(model, x, y, budget, *margin, pgd);
                rec["ca"] = greedy.cA;
                rec["rnorm"] = greedy.outcome.rnorm;
                rec["flipped"] = greedy.outcome.flipped;
                caSum += greedy.cA;
            }
            jsonl << rec.dump() << '\n';
        }

        json summary;
        summary["schemaVersion"] = 1;
        summary["count"] = rows.size();
        summary["epsilon"] = *epsilon;
        if (*exact) {
            summary["cstarMean"] = cstarSum / static_cast<double>(rows.size());
            std::cout << "attack: cstar_mean="
                      << malt::formatDouble17(cstarSum / static_cast<double>(rows.size()))
                      << "\n";
        } else {
            summary["caMean"] = caSum / static_cast<double>(rows.size());
            std::cout << "attack: ca_mean="
                      << malt::formatDouble17(caSum / static_cast<double>(rows.size()))
                      << "\n";
        }
        if (!summaryOut->empty()) openOut(resolveOut(*summaryOut)) << summary.dump(2) << '\n';
    });
}

void addSae(CLI::App& app) {
    auto* cmd = app.add_subcommand("sae", "Score per-instance attackability");
    auto data = std::make_shared<std::string>();
    auto modelPath = std::make_shared<std::string>();
    auto split = std::make_shared<std::string>("test");
    auto form = std::make_shared<std::string>("raw");
    auto alpha = std::make_shared<double>(malt::kDefaultAlpha);
    auto noClamp = std::make_shared<bool>(false);
    auto out = std::make_shared<std::string>("sae_scores.csv");
    cmd->add_option("--data", *data, "Dataset CSV (with sidecar)")->required();
    cmd->add_option("--model", *modelPath, "Model JSON")->required();
    cmd->add_option("--split", *split, "Split to score")
        ->check(CLI::IsMember({"train", "val", "test"}));
    cmd->add_option("--form", *form, "raw (label-free) or reg (label-aware)")
        ->check(CLI::IsMember({"raw", "reg"}));
    cmd->add_option("--alpha", *alpha, "Clamp floor for the reg form");
    cmd->add_flag("--no-clamp", *noClamp,
                  "Fail on near-boundary scores instead of clamping (raw form)");
    cmd->add_option("--out", *out, "Scores CSV output");
    cmd->callback([=]() {
        malt::Dataset dataset = malt::loadDatasetFiles(*data);
        malt::Model model = malt::loadModel(*modelPath);
        const auto& rows = dataset.split(*split);
        if (rows.empty()) throw std::invalid_argument("sae: empty split");

        std::ofstream csv = openOut(resolveOut(*out));
        csv << "# schemaVersion=1\n";
        csv << "index,phi,subset\n";
        double sum = 0.0;
        for (std::size_t idx : rows) {
            malt::SaeScore score;
            if (*form == "raw") {
                score = malt::saeGreedy(
                    malt::transferVectorsRaw(model, dataset.X.row(idx), !*noClamp));
            } else {
                score = malt::saeRegularizerValue(model, dataset.X.row(idx),
                                                  dataset.Y.row(idx), *alpha);
            }
            csv << idx << ',' << malt::formatDouble17(score.phi) << ',';
            for (std::size_t t = 0; t < score.subset.size(); ++t)
                csv << score.subset[t] << (t + 1 < score.subset.size() ? "|" : "");
            csv << '\n';
            sum += score.phi;
        }
        std::cout << "sae: mean_phi="
                  << malt::formatDouble17(sum / static_cast<double>(rows.size()))
                  << " count=" << rows.size() << "\n";
    });
}

void addEvaluate(CLI::App& app) {
    auto* cmd = app.add_subcommand("evaluate", "F1 report on clean and attacked copies");
    auto data = std::make_shared<std::string>();
    auto modelPath = std::make_shared<std::string>();
    auto split = std::make_shared<std::string>("test");
    auto epsilon = std::make_shared<double>(-1.0);
    auto margin = std::make_shared<double>(malt::kDefaultFlipMargin);
    auto out = std::make_shared<std::string>("eval.json");
    cmd->add_option("--data", *data, "Dataset CSV (with sidecar)")->required();
    cmd->add_option("--model", *modelPath, "Model JSON")->required();
    cmd->add_option("--split", *split, "Split to evaluate")
        ->check(CLI::IsMember({"train", "val", "test"}));
    cmd->add_option("--epsilon", *epsilon, "Attack budget; omit for clean-only");
    cmd->add_option("--margin", *margin, "Strict flip margin");
    cmd->add_option("--out", *out, "Report JSON output");
    cmd->callback([=]() {
        malt::Dataset dataset = malt::loadDatasetFiles(*data);
        malt::Model model = malt::loadModel(*modelPath);
        const auto& rows = dataset.split(*split);
        if (rows.empty()) throw std::invalid_argument("evaluate: empty split");
        const std::size_t m = dataset.labels();

        malt::Matrix cleanPred(rows.size(), m), attackedPred(rows.size(), m),
            truth(rows.size(), m);
        malt::BudgetSpec budget;
        budget.epsilon = *epsilon;
        budget.clip = dataset.clipBox;
        const bool withAttack = *epsilon >= 0.0;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            auto x = dataset.X.row(rows[i]);
            malt::Prediction clean = malt::forward(model, x);
            for (std::size_t j = 0; j < m; ++j) {
                cleanPred(i, j) = clean.signs[j];
                truth(i, j) = dataset.Y(rows[i], j);
            }
            if (withAttack) {
                malt::GreedyAttackability greedy = malt::greedyAttackability(
                    model, x, dataset.Y.row(rows[i]), budget, *margin);
                malt::Prediction attacked =
                    malt::forward(model, malt::added(x, greedy.outcome.r));
                for (std::size_t j = 0; j < m; ++j) attackedPred(i, j) = attacked.signs[j];
            }
        }
        malt::EvalReport clean = malt::f1Scores(cleanPred, truth);
        json j;
        j["schemaVersion"] = 1;
        j["split"] = *split;
        j["clean"] = reportJson(clean);
        if (withAttack) {
            malt::EvalReport attacked = malt::f1Scores(attackedPred, truth);
            j["attacked"] = reportJson(attacked);
            j["epsilon"] = *epsilon;
            std::cout << "evaluate: clean_micro_f1=" << malt::formatDouble17(clean.microF1)
                      << " attacked_micro_f1=" << malt::formatDouble17(attacked.microF1)
                      << "\n";
        } else {
            j["attacked"] = nullptr;
            j["epsilon"] = nullptr;
            std::cout << "evaluate: clean_micro_f1=" << malt::formatDouble17(clean.microF1)
                      << "\n";
        }
        openOut(resolveOut(*out)) << j.dump(2) << '\n';
    });
}

void writeSweepCsv(const std::vector<malt::SweepRow>& rows, const std::string& path) {
    std::ofstream csv = openOut(path);
    csv << "# schemaVersion=1\n";
    csv << "regularizer,lambda,phiAlign,saeMean,caMean,cleanMicroF1,cleanMacroF1,"
           "attackedMicroF1,attackedMacroF1\n";
    for (const malt::SweepRow& row : rows) {
        csv << malt::regularizerName(row.setting.reg) << ','
            << malt::formatDouble17(row.setting.lambda) << ','
            << malt::formatDouble17(row.eval.phiAlignValue) << ','
            << malt::formatDouble17(row.eval.saeMean) << ','
            << malt::formatDouble17(row.eval.caMean) << ','
            << malt::formatDouble17(row.eval.cleanMicroF1) << ','
            << malt::formatDouble17(row.eval.cleanMacroF1) << ','
            << malt::formatDouble17(row.eval.attackedMicroF1) << ','
            << malt::formatDouble17(row.eval.attackedMacroF1) << '\n';
    }
}

void addSweep(CLI::App& app) {
    auto* cmd = app.add_subcommand(
        "sweep", "Train and evaluate a grid of regularizer settings");
    auto data = std::make_shared<std::string>();
    auto regs = std::make_shared<std::vector<std::string>>(std::vector<std::string>{"arm-sae"});
    auto lambdas = std::make_shared<std::vector<double>>();
    auto epsilon = std::make_shared<double>(0.3);
    auto split = std::make_shared<std::string>("test");
    auto margin = std::make_shared<double>(malt::kDefaultFlipMargin);
    auto outDir = std::make_shared<std::string>("sweep_out");
    auto flags = std::make_shared<TrainFlags>();
    cmd->add_option("--data", *data, "Dataset CSV (with sidecar)")->required();
    cmd->add_option("--regs", *regs, "Regularizers to sweep")->delimiter(',');
    cmd->add_option("--lambdas", *lambdas, "Lambda grid")->delimiter(',');
    cmd->add_option("--epsilon", *epsilon, "Attack budget for evaluation");
    cmd->add_option("--split", *split, "Evaluation split")
        ->check(CLI::IsMember({"train", "val", "test"}));
    cmd->add_option("--margin", *margin, "Strict flip margin");
    cmd->add_option("--out-dir", *outDir, "Output directory");
    flags->attach(cmd, /*withReg=*/false);
    cmd->callback([=]() {
        malt::Dataset dataset = malt::loadDatasetFiles(*data);

        std::vector<malt::SweepSetting> settings;
        for (const std::string& name : *regs) {
            malt::Regularizer reg = malt::regularizerFromName(name);
            if (reg == malt::Regularizer::None) {
                settings.push_back({reg, 0.0});
                continue;
            }
            if (lambdas->empty())
                throw std::invalid_argument("sweep: --lambdas required for regularizer '" +
                                            name + "'");
            for (double lambda : *lambdas) settings.push_back({reg, lambda});
        }
        if (settings.empty()) throw std::invalid_argument("sweep: empty grid");

        malt::SweepConfig config;
        config.init = flags->init();
        config.base = flags->spec();
        config.eval.epsilon = *epsilon;
        config.eval.split = *split;
        config.eval.margin = *margin;
        config.eval.alpha = flags->alpha;

        const std::string dir = resolveOut(*outDir);
        fs::create_directories(dir);

        std::vector<malt::SweepRow> done;
        auto printRow = [&](const malt::SweepRow& row) {
            done.push_back(row);
            std::cout << "sweep: reg=" << malt::regularizerName(row.setting.reg)
                      << " lambda=" << row.setting.lambda
                      << " phi_align=" << row.eval.phiAlignValue
                      << " sae_mean=" << row.eval.saeMean << " ca_mean=" << row.eval.caMean
                      << " clean_micro_f1=" << row.eval.cleanMicroF1
                      << " attacked_micro_f1=" << row.eval.attackedMicroF1 << "\n";
        };

        std::vector<malt::SweepRow> rows;
        try {
            rows = malt::runSweep(dataset, config, settings, printRow);
        } catch (const std::exception& e) {
            const std::string partial = dir + "/sweep.partial.csv";
            writeSweepCsv(done, partial);
            std::cerr << "sweep: failed after " << done.size()
                      << " rows; partial results: " << partial << "\n";
            throw;
        }

        writeSweepCsv(rows, dir + "/sweep.csv");

        json summary;
        summary["schemaVersion"] = 1;
        summary["rows"] = rows.size();
        summary["epsilon"] = *epsilon;
        if (rows.size() >= 3) {
            std::vector<double> sae, ca;
            for (const malt::SweepRow& row : rows) {
                sae.push_back(row.eval.saeMean);
                ca.push_back(row.eval.caMean);
            }
            try {
                malt::SpearmanResult sp = malt::spearman(sae, ca);
                summary["spearmanSaeCa"] = sp.rho;
                summary["spearmanP"] = sp.pApprox;
                std::cout << "sweep: spearman_sae_ca=" << malt::formatDouble17(sp.rho)
                          << " p=" << malt::formatDouble17(sp.pApprox) << "\n";
            } catch (const std::invalid_argument& e) {
                summary["spearmanSaeCa"] = std::string(e.what());
                std::cout << "sweep: spearman_sae_ca unavailable (" << e.what() << ")\n";
            }
        } else {
            summary["spearmanSaeCa"] = "insufficient points";
            std::cout << "sweep: spearman_sae_ca unavailable (insufficient points)\n";
        }
        openOut(dir + "/sweep_summary.json") << summary.dump(2) << '\n';
    });
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Attackability measurement and robust training for multi-label classifiers"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Read options from a TOML file");

    addGenData(app);
    addTrain(app);
    addAttack(app);
    addSae(app);
    addEvaluate(app);
    addSweep(app);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const malt::NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
