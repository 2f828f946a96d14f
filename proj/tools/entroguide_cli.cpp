// entroguide command-line interface.
//
//   entroguide entropy  --task math --problem p.txt --response r.txt [--config c.json]
//   entroguide repo stats <repo.jsonl>
//   entroguide repo query <repo.jsonl> --problem p.txt -k 3
//   entroguide run      --task t.jsonl --mode guided_rag --config c.json --repo repo.jsonl --out-dir out/
//   entroguide bench    --dataset d.jsonl --modes no_guidance,cot,guided,guided_rag
//                       --strong gpt --weak qwen --n 50 --seed 7 --out-dir results/
//   entroguide ingest   gsm8k|mbpp <in> <out>
//   entroguide gen-cvrp --customers 6 --seed 1 [--count 20] [--out cvrp.jsonl]
//
// Exit codes: 0 ok, 1 runtime failure, 2 configuration error, 3 dataset error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "entroguide/entroguide.hpp"

namespace eg = entroguide;
namespace fs = std::filesystem;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitDataset = 3;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw eg::DataError("cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

eg::AppConfig config_or_default(const std::string& path) {
    return path.empty() ? eg::AppConfig{} : eg::load_config(path);
}

eg::ExperienceStore open_repo(const std::string& path) {
    if (path.empty() || !fs::exists(path)) return eg::ExperienceStore{};
    return eg::ExperienceStore::load(path);
}

// Explicit name, else the first profile of the requested strength.
const eg::AgentProfile& pick_profile(const eg::AppConfig& cfg, const std::string& name, eg::Strength strength) {
    if (!name.empty()) return cfg.profile(name);
    for (const auto& [n, p] : cfg.profiles) {
        if (p.strength == strength) return p;
    }
    throw eg::ConfigError("config has no " + std::string(eg::to_string(strength)) + " profile");
}

std::vector<eg::Mode> parse_modes(const std::string& csv) {
    std::vector<eg::Mode> modes;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) modes.push_back(eg::parse_mode(item));
    }
    if (modes.empty()) throw eg::ConfigError("--modes lists no modes");
    return modes;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Entropy-guided strong/weak agent collaboration engine and benchmark harness"};
    app.require_subcommand(1);

    // entropy
    auto* entropy_cmd = app.add_subcommand("entropy", "Score responses and print one EntropyReport JSON per line");
    std::string task_kind;
    std::string problem_file;
    std::vector<std::string> response_files;
    std::string config_file;
    entropy_cmd->add_option("--task", task_kind, "math | code | routing")->required();
    entropy_cmd->add_option("--problem", problem_file, "File holding the problem text")->required();
    entropy_cmd->add_option("--response", response_files, "File(s) holding a response")->required();
    entropy_cmd->add_option("--config", config_file, "JSON config");

    // repo
    auto* repo_cmd = app.add_subcommand("repo", "Inspect an experience repository");
    repo_cmd->require_subcommand(1);
    std::string repo_path;
    auto* repo_stats = repo_cmd->add_subcommand("stats", "Record count, vocabulary size, df histogram");
    repo_stats->add_option("path", repo_path)->required();
    auto* repo_query = repo_cmd->add_subcommand("query", "Top-k retrieval for a problem (read-only)");
    repo_query->add_option("path", repo_path)->required();
    std::string query_problem;
    std::size_t query_k = 3;
    double query_s_min = 0.1;
    repo_query->add_option("--problem", query_problem, "File holding the problem text")->required();
    repo_query->add_option("-k", query_k, "Number of hits")->default_val(3);
    repo_query->add_option("--s-min", query_s_min, "Injection threshold")->default_val(0.1);

    // run
    auto* run_cmd = app.add_subcommand("run", "Run one collaboration session");
    std::string run_task_file;
    std::string run_task_id;
    std::string run_mode = "guided_rag";
    std::string run_config;
    std::string run_repo;
    std::string run_out_dir = ".";
    std::string run_strong;
    std::string run_weak;
    run_cmd->add_option("--task", run_task_file, "Task JSONL file")->required();
    run_cmd->add_option("--task-id", run_task_id, "Task id within the file (default: first)");
    run_cmd->add_option("--mode", run_mode, "no_guidance | cot | guided | guided_rag");
    run_cmd->add_option("--config", run_config, "JSON config")->required();
    run_cmd->add_option("--repo", run_repo, "Experience repository (JSONL)");
    run_cmd->add_option("--out-dir", run_out_dir, "Transcript directory");
    run_cmd->add_option("--strong", run_strong, "Strong profile name");
    run_cmd->add_option("--weak", run_weak, "Weak profile name");

    // bench
    auto* bench_cmd = app.add_subcommand("bench", "Run a dataset across modes and emit summary tables");
    std::string bench_dataset;
    std::string bench_modes = "no_guidance,cot,guided,guided_rag";
    std::string bench_strong;
    std::string bench_weak;
    std::size_t bench_n = 0;
    std::uint64_t bench_seed = 7;
    std::string bench_out = "results";
    std::string bench_config;
    std::string bench_repo;
    std::string bench_name;
    std::size_t bench_workers = 0;
    bench_cmd->add_option("--dataset", bench_dataset, "Dataset JSONL")->required();
    bench_cmd->add_option("--modes", bench_modes, "Comma-separated modes");
    bench_cmd->add_option("--strong", bench_strong, "Strong profile name");
    bench_cmd->add_option("--weak", bench_weak, "Weak profile name");
    bench_cmd->add_option("--n", bench_n, "Stratified sample size (default: whole dataset)");
    bench_cmd->add_option("--seed", bench_seed, "Sampling seed");
    bench_cmd->add_option("--out-dir", bench_out, "Output directory");
    bench_cmd->add_option("--config", bench_config, "JSON config")->required();
    bench_cmd->add_option("--repo", bench_repo, "Experience repository (JSONL); updated in place");
    bench_cmd->add_option("--name", bench_name, "Dataset label in reports (default: file stem)");
    bench_cmd->add_option("--workers", bench_workers, "Worker threads (default: logical cores)");

    // ingest
    auto* ingest_cmd = app.add_subcommand("ingest", "Convert gsm8k/mbpp JSONL into task instances");
    std::string ingest_format;
    std::string ingest_in;
    std::string ingest_out;
    ingest_cmd->add_option("format", ingest_format, "gsm8k | mbpp")->required()->check(CLI::IsMember({"gsm8k", "mbpp"}));
    ingest_cmd->add_option("in", ingest_in)->required();
    ingest_cmd->add_option("out", ingest_out)->required();

    // gen-cvrp
    auto* gen_cmd = app.add_subcommand("gen-cvrp", "Generate random CVRP task instances");
    int gen_customers = 6;
    std::uint64_t gen_seed = 1;
    int gen_count = 1;
    double gen_capacity = 30.0;
    std::string gen_out;
    gen_cmd->add_option("--customers", gen_customers, "Customers per instance")->required();
    gen_cmd->add_option("--seed", gen_seed, "Base seed")->required();
    gen_cmd->add_option("--count", gen_count, "Number of instances");
    gen_cmd->add_option("--capacity", gen_capacity, "Vehicle capacity");
    gen_cmd->add_option("--out", gen_out, "Output JSONL (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (*entropy_cmd) {
            const auto cfg = config_or_default(config_file);
            const auto kind = eg::parse_task_kind(task_kind);
            const std::string problem = read_file(problem_file);
            for (const auto& rf : response_files) {
                auto report = eg::understanding_entropy(problem, read_file(rf), kind, cfg.entropy);
                std::cout << eg::entropy_to_json(report).dump() << "\n";
            }
        } else if (*repo_stats) {
            const auto repo = eg::ExperienceStore::load(repo_path);
            const auto s = repo.stats();
            nlohmann::json hist = nlohmann::json::object();
            for (const auto& [df, count] : s.df_histogram) hist[std::to_string(df)] = count;
            std::cout << nlohmann::json{{"records", s.records}, {"vocabulary_size", s.vocabulary_size}, {"df_histogram", hist}}.dump()
                      << "\n";
        } else if (*repo_query) {
            const auto repo = eg::ExperienceStore::load(repo_path);
            for (const auto& hit : repo.rank(read_file(query_problem), query_k, query_s_min)) {
                std::cout << nlohmann::json{{"id", hit.record.id},
                                            {"similarity", hit.similarity},
                                            {"injected", hit.injected},
                                            {"usage_count", hit.record.usage_count},
                                            {"problem_text", hit.record.problem_text}}
                                 .dump()
                          << "\n";
            }
        } else if (*run_cmd) {
            const auto cfg = eg::load_config(run_config);
            const auto mode = eg::parse_mode(run_mode);
            const auto tasks = eg::load_dataset(run_task_file);
            if (tasks.empty()) throw eg::DataError(run_task_file + " holds no tasks");
            const eg::TaskInstance* task = &tasks.front();
            if (!run_task_id.empty()) {
                auto it = std::find_if(tasks.begin(), tasks.end(), [&](const auto& t) { return t.id == run_task_id; });
                if (it == tasks.end()) throw eg::DataError("task id '" + run_task_id + "' not found");
                task = &*it;
            }
            auto repo = open_repo(run_repo);
            auto strong = eg::make_agent(pick_profile(cfg, run_strong, eg::Strength::Strong), task->id);
            auto weak = eg::make_agent(pick_profile(cfg, run_weak, eg::Strength::Weak), task->id);
            auto transcript = eg::run_session(*task, cfg.session(mode), *strong, *weak, &repo);
            eg::write_transcript(run_out_dir, transcript);
            if (mode == eg::Mode::GuidedRag && !run_repo.empty()) repo.save(run_repo);
            std::cout << (fs::path(run_out_dir) / eg::transcript_filename(transcript)).string() << ": "
                      << (transcript.success ? "success" : "failure") << " in " << transcript.rounds_used
                      << " round(s)" << (transcript.aborted ? " (aborted: " + transcript.abort_reason + ")" : "")
                      << "\n";
        } else if (*bench_cmd) {
            const auto cfg = eg::load_config(bench_config);
            eg::BatchSpec spec;
            spec.modes = parse_modes(bench_modes);
            spec.strong = pick_profile(cfg, bench_strong, eg::Strength::Strong);
            spec.weak = pick_profile(cfg, bench_weak, eg::Strength::Weak);
            spec.session = cfg.session(eg::Mode::NoGuidance);
            spec.session.seed = bench_seed;
            spec.workers = bench_workers;
            spec.dataset = bench_name.empty() ? fs::path(bench_dataset).stem().string() : bench_name;
            auto tasks = eg::load_dataset(bench_dataset);
            if (tasks.empty()) throw eg::DataError(bench_dataset + " holds no tasks");
            spec.tasks = (bench_n == 0 || bench_n >= tasks.size()) ? tasks : eg::stratified_sample(tasks, bench_n, bench_seed);
            auto repo = open_repo(bench_repo);
            auto result = eg::run_batch(spec, repo);
            eg::write_batch_outputs(bench_out, result);
            if (!bench_repo.empty()) repo.save(bench_repo);
            std::cout << eg::render_report(result.report, eg::ReportFormat::Markdown);
        } else if (*ingest_cmd) {
            const auto n = eg::ingest_file(ingest_format, ingest_in, ingest_out);
            std::cerr << "wrote " << n << " task(s) to " << ingest_out << "\n";
        } else if (*gen_cmd) {
            if (gen_count < 1) throw eg::ConfigError("--count must be >= 1");
            std::ofstream file;
            if (!gen_out.empty()) {
                file.open(gen_out, std::ios::trunc);
                if (!file) throw eg::DataError("cannot write " + gen_out);
            }
            std::ostream& out = gen_out.empty() ? std::cout : file;
            for (int i = 0; i < gen_count; ++i) {
                const std::uint64_t seed = gen_seed + static_cast<std::uint64_t>(i);
                auto inst = eg::generate_routing_instance(gen_customers, seed, gen_capacity);
                inst.optimal_distance = eg::exact_optimal_distance(inst);
                eg::TaskInstance t;
                t.id = "cvrp-n" + std::to_string(gen_customers) + "-s" + std::to_string(seed);
                t.kind = eg::TaskKind::Routing;
                t.problem = eg::describe_routing_instance(inst);
                t.reference = eg::RoutingReference{inst};
                t.difficulty = eg::classify_difficulty(t);
                out << eg::task_to_json(t).dump() << "\n";
            }
        }
    } catch (const eg::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const eg::DataError& e) {
        std::cerr << "dataset error: " << e.what() << "\n";
        return kExitDataset;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
