// Copyright 2026 The dprw Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Writes one of the built-in synthetic intent corpora as TSV splits.

#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "dprw/corpus.hpp"
#include "dprw/error.hpp"
#include "dprw/synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app("Generate a synthetic intent corpus", "dprw_synth");
  std::string domain = "travel", out_dir;
  std::uint64_t seed = 7;
  dprw::SyntheticSizes sizes;
  app.add_option("--domain", domain, "travel or assistant")->capture_default_str();
  app.add_option("--out-dir", out_dir, "destination directory")->required();
  app.add_option("--seed", seed, "generator seed")->capture_default_str();
  app.add_option("--train", sizes.train, "training documents")->capture_default_str();
  app.add_option("--val", sizes.validation, "validation documents")->capture_default_str();
  app.add_option("--test", sizes.test, "test documents")->capture_default_str();
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }
  try {
    const dprw::LabeledDataset ds = dprw::make_synthetic_corpus(dprw::parse_domain(domain), sizes, seed);
    const std::filesystem::path dir(out_dir);
    std::filesystem::create_directories(dir);
    dprw::write_rewritten_dataset(ds.train, (dir / "train.tsv").string());
    dprw::write_rewritten_dataset(ds.validation, (dir / "validation.tsv").string());
    dprw::write_rewritten_dataset(ds.test, (dir / "test.tsv").string());
    std::cout << domain << ": " << ds.train.size() << " train, " << ds.validation.size() << " validation, "
              << ds.test.size() << " test, " << ds.label_set.size() << " labels -> " << dir.string() << "\n";
  } catch (const dprw::ConfigError& e) {
    std::cerr << "dprw_synth: error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "dprw_synth: runtime error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
