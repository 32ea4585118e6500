#include <fstream>

#include "ava/error.hpp"
#include "ava/imaging_io.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace ava;

TEST_SUITE("imaging_io") {
  TEST_CASE("PNG round trip is exact after 8-bit quantization") {
    test::TempDir dir;
    std::mt19937_64 rng(8);
    for (std::size_t c : {1u, 3u}) {
      const ImageTensor img = test::random_image(rng, 5, 7, c);
      const auto path = dir / ("img" + std::to_string(c) + ".png");
      save_image(img, path);
      const ImageTensor back = load_image(path);
      CHECK(back == quantize_8bit(img));
      for (std::size_t i = 0; i < img.size(); ++i) {
        CHECK(std::abs(back.values()[i] - img.values()[i]) <= 1.0 / 510.0);
      }
    }
  }

  TEST_CASE("PNM round trip") {
    test::TempDir dir;
    std::mt19937_64 rng(9);
    const ImageTensor gray = quantize_8bit(test::random_image(rng, 3, 4, 1));
    const ImageTensor rgb = quantize_8bit(test::random_image(rng, 3, 4, 3));
    save_image(gray, dir / "g.pgm");
    save_image(rgb, dir / "c.ppm");
    CHECK(load_image(dir / "g.pgm") == gray);
    CHECK(load_image(dir / "c.ppm") == rgb);
    CHECK_THROWS_AS(save_image(rgb, dir / "bad.pgm"), IoError);
  }

  TEST_CASE("quantization snaps to multiples of 1/255") {
    ImageTensor img(1, 3, 1);
    img.at(0, 0) = 0.5 / 255.0;
    img.at(0, 1) = 1.0;
    img.at(0, 2) = 0.49 / 255.0;
    const ImageTensor q = quantize_8bit(img);
    CHECK(q.at(0, 0) == 1.0 / 255.0);
    CHECK(q.at(0, 1) == 1.0);
    CHECK(q.at(0, 2) == 0.0);
  }

  TEST_CASE("missing and corrupt files") {
    test::TempDir dir;
    CHECK_THROWS_AS(load_image(dir / "none.png"), IoError);
    std::ofstream(dir / "junk.png") << "not an image";
    CHECK_THROWS_AS(load_image(dir / "junk.png"), IoError);
  }

  TEST_CASE("manifest parsing") {
    test::TempDir dir;
    std::ofstream(dir / "m.csv") << "path,label\nimages/a.png,2\n/abs/b.png,0\n";
    const DatasetManifest m = load_manifest(dir / "m.csv");
    REQUIRE(m.records.size() == 2);
    CHECK(m.records[0].path == dir / "images/a.png");
    CHECK(m.records[1].path == "/abs/b.png");
    CHECK(m.class_count == 3);
    CHECK_THROWS_AS(load_manifest(dir / "m.csv", 2), ParseError);

    std::ofstream(dir / "bad.csv") << "path,label\nx.png,two\n";
    CHECK_THROWS_AS(load_manifest(dir / "bad.csv"), ParseError);
    std::ofstream(dir / "nohdr.csv") << "x.png,1\n";
    CHECK_THROWS_AS(load_manifest(dir / "nohdr.csv"), ParseError);
  }

  TEST_CASE("float grid round trip is exact") {
    test::TempDir dir;
    const std::vector<double> v{0.1, 1.0 / 3.0, -2.5e-17, 7.0, 0.0, 1e300};
    write_float_grid(dir / "g.txt", 2, 3, v);
    std::size_t h = 0, w = 0;
    CHECK(read_float_grid(dir / "g.txt", &h, &w) == v);
    CHECK(h == 2);
    CHECK(w == 3);
  }
}
