#include <iostream>

#include "CLI11.hpp"
#include "orderkit/dictxlate.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Word-by-word translation through a bilingual dictionary"};
    std::string dict_path, input_path, output_path, oov = "copy";
    bool lowercase = true;
    app.add_option("--dict", dict_path, "TSV dictionary: source<TAB>assisting")->required();
    app.add_option("--input", input_path, "tokenized sentence file")->required();
    app.add_option("--output", output_path, "output sentence file")->required();
    app.add_option("--oov", oov, "copy | unk")->check(CLI::IsMember({"copy", "unk"}));
    app.add_flag("--lowercase,!--no-lowercase", lowercase, "lowercase keys and input (default on)");
    CLI11_PARSE(app, argc, argv);

    try {
        namespace dx = orderkit::dictxlate;
        dx::BilingualDictionary dict = dx::load_dictionary(dict_path, lowercase);
        dict.oov_policy = oov == "copy" ? dx::OovPolicy::Copy : dx::OovPolicy::Unk;
        std::vector<std::string> out;
        std::size_t oov_total = 0, tokens_total = 0;
        for (const std::string& line : orderkit::read_lines(input_path)) {
            dx::TranslationResult r = dx::translate_word_by_word(orderkit::split_ws(line), dict);
            oov_total += r.oov_count;
            tokens_total += r.tokens.size();
            out.push_back(orderkit::join(r.tokens));
        }
        orderkit::write_lines(output_path, out);
        double rate = tokens_total ? static_cast<double>(oov_total) / tokens_total : 0.0;
        std::cout << "entries " << dict.size() << " duplicates " << dict.duplicates << " oov_rate "
                  << orderkit::format_double(rate, 4) << "\n";
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
