#include <iostream>

#include "CLI11.hpp"
#include "orderkit/pipeline.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Word-order transfer experiment harness"};
    app.require_subcommand(1);

    std::string config_path, out_dir, format = "text";
    bool force = false, resume = false;

    CLI::App* run = app.add_subcommand("run", "run the full experiment matrix");
    run->add_option("--config", config_path, "experiment config (JSON)")->required();
    run->add_option("--out", out_dir, "output directory")->required();
    run->add_flag("--force", force, "wipe the output directory first");
    run->add_flag("--resume", resume, "reuse cached stage outputs");

    CLI::App* report = app.add_subcommand("report", "render a finished run's report");
    report->add_option("--out", out_dir, "output directory of a finished run")->required();
    report->add_option("--format", format, "text | machine")
        ->check(CLI::IsMember({"text", "machine"}));

    CLI11_PARSE(app, argc, argv);

    using namespace orderkit;
    try {
        if (run->parsed()) {
            pipeline::ExperimentConfig config = pipeline::load_config(config_path);
            pipeline::RunOptions options;
            options.force = force;
            options.resume = resume;
            pipeline::EvalReport rep = pipeline::run_experiment(config, out_dir, options);
            std::cout << pipeline::render_report_text(rep);
        } else {
            pipeline::EvalReport rep = pipeline::load_report(out_dir);
            std::cout << (format == "text" ? pipeline::render_report_text(rep)
                                           : pipeline::render_report_machine(rep));
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
