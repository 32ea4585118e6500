// Writes the synthetic lighting suite: PNGs, manifest.csv, the matching
// classifier weights and a ready-to-run attack config.

#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "ava/imaging_io.hpp"
#include "toy_suite.hpp"

namespace fs = std::filesystem;

int main(int argc, char** argv) {
  ava::toy::Options opt;
  fs::path out = "toy";
  CLI::App app{"Generate the synthetic lighting suite", "make_toy_suite"};
  app.add_option("-o,--out", out, "Output directory");
  app.add_option("--seed", opt.seed, "Generator seed");
  app.add_option("--per-class", opt.per_class, "Images per class");
  app.add_option("--size", opt.size, "Image side in pixels");
  CLI11_PARSE(app, argc, argv);

  try {
    const ava::toy::Suite suite = ava::toy::make_suite(opt);
    fs::create_directories(out / "images");
    std::ofstream manifest(out / "manifest.csv");
    manifest << "path,label\n";
    for (const ava::Sample& s : suite.samples) {
      const fs::path rel = fs::path("images") / (s.id + ".png");
      ava::save_image(s.image, out / rel);
      manifest << rel.generic_string() << "," << s.label << "\n";
    }
    suite.model.save(out / "weights.json");
    std::ofstream config(out / "attack.conf");
    config << "# Toy lighting suite. Paths are relative to this file.\n"
              "run.manifest = manifest.csv\n"
              "run.oracle = builtin:weights.json\n"
              "run.model_name = toy\n"
              "run.mode = ra\n"
              "run.out = out\n";
    if (!manifest || !config) throw std::runtime_error("failed writing into " + out.string());
    std::cout << "wrote " << suite.samples.size() << " images to " << out.string() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "make_toy_suite: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
