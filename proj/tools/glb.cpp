#include <glb/cli.hpp>

#include <exception>
#include <iostream>

int main(int argc, char** argv)
{
    glb::CliParser parser;
    glb::ExperimentConfig cfg;
    try {
        cfg = parser.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return parser.app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    try {
        const glb::RunOutput out = glb::run(cfg);
        std::cout << out.summary;
        std::cout << "wrote";
        for (const auto& f : out.files) std::cout << " " << f;
        std::cout << " to " << cfg.output_dir << "\n";
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
