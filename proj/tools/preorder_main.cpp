#include <iostream>

#include "CLI11.hpp"
#include "orderkit/preorder.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Reorder a treebank file with a declarative rule set"};
    std::string rules_path, input_path, output_path, on_error = "fail";
    app.add_option("--rules", rules_path, "rule file")->required();
    app.add_option("--input", input_path, "treebank file, one bracketed tree per line")->required();
    app.add_option("--output", output_path, "output sentence file")->required();
    app.add_option("--on-parse-error", on_error, "fail | passthrough")
        ->check(CLI::IsMember({"fail", "passthrough"}));
    CLI11_PARSE(app, argc, argv);

    try {
        orderkit::preorder::RuleSet rules = orderkit::preorder::load_rules(rules_path);
        orderkit::preorder::OnParseError policy = on_error == "fail"
                                                      ? orderkit::preorder::OnParseError::Fail
                                                      : orderkit::preorder::OnParseError::Passthrough;
        orderkit::preorder::CorpusSummary s =
            orderkit::preorder::preorder_corpus_file(input_path, rules, output_path, policy);
        std::cout << "reordered " << s.reordered << " unchanged " << s.unchanged << " skipped "
                  << s.skipped << "\n";
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
