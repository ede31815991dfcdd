// Test evaluator speaking the line protocol on stdin/stdout.
//
//   stub_evaluator --function sphere_sq --param dim=2
//   stub_evaluator --function gaussian --fail-after 5    (closes after 5 replies)
//   stub_evaluator --function gaussian --reply nan       (answers "nan" to everything)

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "annr/external.hpp"
#include "annr/testbed.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Line-protocol evaluator serving a builtin function"};
    std::string function = "sphere_sq";
    std::vector<std::string> params;
    std::size_t fail_after = 0;
    std::string reply;
    app.add_option("--function", function, "builtin function name")->capture_default_str();
    app.add_option("--param", params, "builtin parameter key=value (repeatable)");
    app.add_option("--fail-after", fail_after, "exit after this many replies (0: never)");
    app.add_option("--reply", reply, "fixed reply line instead of the function value");
    CLI11_PARSE(app, argc, argv);

    try {
        annr::Params p;
        for (const auto& kv : params) {
            const auto eq = kv.find('=');
            const auto v = eq == std::string::npos ? std::nullopt : annr::parse_double(kv.substr(eq + 1));
            if (!v) throw annr::ConfigError("bad --param '" + kv + "'");
            p[kv.substr(0, eq)] = *v;
        }
        const auto fn = annr::builtin(function, p);
        std::size_t served = 0;
        std::ios::sync_with_stdio(false);
        if (!reply.empty()) {
            std::string line;
            if (!std::getline(std::cin, line)) return 0;
            std::cout << "READY\n" << std::flush;
            while (std::getline(std::cin, line)) std::cout << reply << '\n' << std::flush;
            return 0;
        }
        annr::serve_protocol(std::cin, std::cout, fn.dim(), [&](const annr::Point& x) {
            if (fail_after && served++ >= fail_after) std::_Exit(0);
            return fn.evaluate(x);
        });
    } catch (const std::exception& e) {
        std::cerr << "stub_evaluator: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
