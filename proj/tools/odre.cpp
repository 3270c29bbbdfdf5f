#include <iostream>
#include <string>
#include <vector>

#include "odre/campaign.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  odre::Config config;
  try {
    config = odre::parse_cli(args);
  } catch (const odre::HelpRequested& help) {
    std::cout << help.what();
    return 0;
  } catch (const odre::UsageError& e) {
    std::cerr << "odre: " << e.what() << "\nRun with --help for usage.\n";
    return 2;
  }

  odre::log::info("seed={}{}", config.seed, config.seed_drawn ? " (drawn; pass --seed to reproduce)" : "");
  try {
    auto result = odre::run_detection(config, [](const odre::RunRecord& r, std::size_t done, std::size_t total) {
      odre::log::info("[{}/{}] {} order {} rerun {}{}", done, total, r.run_spec.target_id, r.run_spec.reorder_index,
                      r.run_spec.rerun_index, r.valid ? "" : " (invalid)");
    });
    const auto& s = result.summary;
    std::cout << fmt::format("{} tests analyzed, {} order-dependent candidate(s), seed {}\n", s.tests_analyzed,
                             s.order_dependent, result.config.seed);
    if (!s.written_to_stdout) {
      std::cout << fmt::format("report: {}\n        {}\n", s.json_path.string(), s.markdown_path.string());
    }
    return result.exit_code;
  } catch (const odre::DiscoveryError& e) {
    std::cerr << "odre: " << e.what() << "\n";
    if (!e.stderr_text().empty()) std::cerr << e.stderr_text() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "odre: " << e.what() << "\n";
    return 2;
  }
}
