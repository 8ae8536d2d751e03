#include <pplp/commands.hpp>

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;

namespace
{

enum Exit
{
    Ok = 0,
    Usage = 1,
    Input = 2,
    Refused = 3
};

std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw pplp::ContractError("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out || !(out << text))
        throw pplp::ContractError("cannot write " + path.string());
}

// --out given: write every named file there; otherwise the first one goes to stdout
void emit(const std::string& out_dir, const std::vector<std::pair<std::string, std::string>>& files)
{
    if (out_dir.empty()) {
        std::cout << files.front().second;
        return;
    }
    for (const auto& [name, text] : files) {
        const fs::path p = fs::path(out_dir) / name;
        fs::create_directories(p.parent_path());
        write_file(p, text);
    }
}

std::string dump(const pplp::Json& j) { return j.dump(2) + "\n"; }

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Hybrid probabilistic logic programs with piecewise-polynomial densities"};
    app.require_subcommand(1);

    pplp::RunConfig cfg;
    std::string out_dir, method = "auto";
    std::size_t bins = 0, sample = 0;

    auto* learn = app.add_subcommand("learn", "learn piecewise-polynomial densities from CSV columns");
    std::string csv_path, alias_path;
    std::vector<std::string> columns;
    learn->add_option("csv", csv_path, "CSV file with a header row")->required();
    learn->add_option("-c,--columns", columns, "columns to learn (default: every numeric column)")->delimiter(',');
    learn->add_option("--max-size", cfg.max_size, "largest number of bins searched")->check(CLI::PositiveNumber);
    learn->add_option("--max-order", cfg.max_order, "largest polynomial degree searched")->check(CLI::Range(1, 10));
    learn->add_option("--bins", bins, "fix the number of bins");
    learn->add_option("--method", method, "binning: ew, ef, distance or auto")
        ->check(CLI::IsMember({"ew", "ef", "distance", "auto"}));
    learn->add_option("--target", cfg.target, "label column for the distance method");
    learn->add_option("--entity", cfg.entity, "entity column; attributes become attr(E,V)");
    learn->add_option("--sample", sample, "learn from a random subsample of this many rows");
    learn->add_option("--seed", cfg.seed, "seed for --sample");
    learn->add_option("--alias", alias_path, "JSON object renaming piece predicates");
    learn->add_option("--out", out_dir, "directory for program.pl and stats.json");

    auto* query = app.add_subcommand("query", "answer the queries of a program");
    std::string program_path, evidence_path;
    query->add_option("program", program_path, "program file")->required();
    query->add_option("--evidence", evidence_path, "file with extra evidence statements");
    query->add_option("--choice-cap", cfg.choice_cap, "largest number of worlds to enumerate");
    query->add_option("--out", out_dir, "directory for results.json");

    auto* transform = app.add_subcommand("transform", "replace densities by piece probabilities");
    std::string data_path;
    transform->add_option("program", program_path, "hybrid program file")->required();
    transform->add_option("--data", data_path, "CSV of observations; adds piece facts per entity");
    transform->add_option("--entity", cfg.entity, "entity column of --data");
    transform->add_option("--out", out_dir, "directory for discretized.pl and mapping.json");

    auto* induce = app.add_subcommand("induce", "learn rules for a target predicate");
    std::string examples_path;
    pplp::RuleLearnOptions ropt;
    induce->add_option("program", program_path, "hybrid or discretized program with background facts")->required();
    induce->add_option("--examples", examples_path, "target facts (positives) and other ground facts")->required();
    induce->add_option("--target", cfg.target, "target predicate, name or name/arity")->required();
    induce->add_option("--precision", ropt.precision, "clause precision threshold")->check(CLI::Range(0.0, 1.0));
    induce->add_option("--max-body", ropt.max_body, "longest clause body")->check(CLI::PositiveNumber);
    induce->add_option("--out", out_dir, "directory for hypothesis.pl, rules.json and task files");

    auto* plot = app.add_subcommand("plotdata", "sample a density for plotting");
    std::string attribute;
    std::size_t npoints = 201;
    plot->add_option("program", program_path, "program file")->required();
    plot->add_option("--attribute", attribute, "attribute name or name/arity")->required();
    plot->add_option("--points", npoints, "number of evenly spaced points")->check(CLI::PositiveNumber);
    plot->add_option("--out", out_dir, "directory for density.csv");

    auto* stats = app.add_subcommand("stats", "summarize the densities and statements of a program");
    stats->add_option("program", program_path, "program file")->required();
    stats->add_option("--out", out_dir, "directory for stats.json");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return Usage;
    }

    try {
        if (learn->parsed()) {
            cfg.method = pplp::parse_method(method);
            if (bins)
                cfg.bins = bins;
            if (sample)
                cfg.sample = sample;
            if (!alias_path.empty()) {
                const auto aliases = pplp::Json::parse(read_file(alias_path));
                for (const auto& [k, v] : aliases.items())
                    cfg.aliases[k] = v.get<std::string>();
            }
            const auto table = pplp::read_csv(read_file(csv_path));
            if (columns.empty())
                for (const auto& h : table.header) {
                    if (h == cfg.entity || h == cfg.target)
                        continue;
                    try {
                        pplp::numeric_column(table, h);
                        columns.push_back(h);
                    } catch (const pplp::ContractError&) {
                    }
                }
            const auto res = pplp::cmd_learn(table, columns, cfg);
            emit(out_dir, {{"program.pl", res.program}, {"stats.json", dump(res.stats)}});
        } else if (query->parsed()) {
            const std::string ev = evidence_path.empty() ? "" : read_file(evidence_path);
            emit(out_dir, {{"results.json", dump(pplp::cmd_query(read_file(program_path), ev, cfg))}});
        } else if (transform->parsed()) {
            std::optional<pplp::Table> data;
            if (!data_path.empty())
                data = pplp::read_csv(read_file(data_path));
            const auto res = pplp::cmd_transform(read_file(program_path), data ? &*data : nullptr, cfg);
            emit(out_dir, {{"discretized.pl", res.program}, {"mapping.json", dump(res.mapping)}});
        } else if (induce->parsed()) {
            const auto res = pplp::cmd_induce(read_file(program_path), read_file(examples_path), cfg, ropt);
            emit(out_dir, {{"hypothesis.pl", res.hypothesis},
                           {"rules.json", dump(res.stats)},
                           {"task/background.pl", res.task.background},
                           {"task/examples.pl", res.task.examples},
                           {"task/bias.pl", res.task.bias}});
        } else if (plot->parsed()) {
            emit(out_dir, {{"density.csv", pplp::cmd_plotdata(read_file(program_path), attribute, npoints)}});
        } else if (stats->parsed()) {
            emit(out_dir, {{"stats.json", dump(pplp::cmd_stats(read_file(program_path)))}});
        }
    } catch (const pplp::InferenceRefusal& e) {
        std::cerr << "pplp: " << e.what() << "\n";
        return Refused;
    } catch (const pplp::Error& e) {
        std::cerr << "pplp: " << e.what() << "\n";
        return Input;
    } catch (const std::exception& e) {
        std::cerr << "pplp: " << e.what() << "\n";
        return Input;
    }
    return Ok;
}
