#include <iostream>

#include <CLI11.hpp>

#include "ecg/testing/wfdb_writer.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Write a small synthetic LTST-like WFDB corpus for trying the pipeline without real data"};
  std::string dir;
  std::size_t records = 8;
  double seconds = 1800.0;
  std::uint64_t seed = 1;
  app.add_option("dir", dir, "Output directory")->required();
  app.add_option("-n,--records", records, "Number of records");
  app.add_option("--seconds", seconds, "Record length in seconds");
  app.add_option("--seed", seed, "Generator seed");
  CLI11_PARSE(app, argc, argv);
  try {
    ecg::testing::write_synthetic_corpus(dir, records, seconds, seed);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
