// Copyright 2026 The tgrasta Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <limits>
#include <string>

#include <gtest/gtest.h>

#include "support.hpp"
#include "tgrasta/io.hpp"

namespace tgrasta::io {
namespace {

using testing::error_code_of;

std::string error_text(std::string_view bytes) {
  try {
    parse_pgm(bytes);
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

TEST(Pgm, AsciiExample) {
  const Image img = parse_pgm("P2 2 2 255 0 255 128 64");
  ASSERT_EQ(img.width(), 2);
  ASSERT_EQ(img.height(), 2);
  EXPECT_EQ(img.data()[0], 0.0);
  EXPECT_EQ(img.data()[1], 1.0);
  EXPECT_DOUBLE_EQ(img.data()[2], 128.0 / 255.0);
  EXPECT_DOUBLE_EQ(img.data()[3], 64.0 / 255.0);
}

TEST(Pgm, HeaderCommentsAreSkipped) {
  const Image img = parse_pgm("P2\n# made by hand\n2 1\n# max\n10\n5 10\n");
  EXPECT_DOUBLE_EQ(img.data()[0], 0.5);
  EXPECT_EQ(img.data()[1], 1.0);
}

TEST(Pgm, TruncatedBinaryNamesExpectedBytes) {
  const std::string bytes = std::string("P5\n3 2\n255\n") + std::string(4, '\x10');
  EXPECT_EQ(error_code_of([&] { parse_pgm(bytes); }), ErrorCode::ParseError);
  const std::string msg = error_text(bytes);
  EXPECT_NE(msg.find("expected 6 bytes"), std::string::npos) << msg;
  EXPECT_NE(msg.find("byte 11"), std::string::npos) << msg;
}

TEST(Pgm, UnsupportedMagic) {
  EXPECT_EQ(error_code_of([] { parse_pgm("P6 1 1 255 \x01\x02\x03"); }),
            ErrorCode::UnsupportedFormat);
  EXPECT_EQ(error_code_of([] { parse_pgm("P"); }), ErrorCode::ParseError);
}

TEST(Pgm, RejectsBadHeaderAndSamples) {
  EXPECT_EQ(error_code_of([] { parse_pgm("P2 0 2 255"); }), ErrorCode::ParseError);
  EXPECT_EQ(error_code_of([] { parse_pgm("P2 1 1 70000 0"); }), ErrorCode::ParseError);
  EXPECT_EQ(error_code_of([] { parse_pgm("P2 1 1 10 11"); }), ErrorCode::ParseError);
  EXPECT_EQ(error_code_of([] { parse_pgm("P2 2 1 10 3"); }), ErrorCode::ParseError);
}

TEST(Pgm, RoundTripWithinOneLevel) {
  const Image img = testing::smooth_image(13, 7, 2.0, 5, 0.0, 1.0);
  const Image back = parse_pgm(encode_pgm(img));
  ASSERT_EQ(back.width(), 13);
  ASSERT_EQ(back.height(), 7);
  for (std::size_t i = 0; i < img.size(); ++i) {
    EXPECT_LE(std::abs(back.data()[i] - img.data()[i]), 0.5 / 255.0 + 1e-15);
  }
}

TEST(Pgm, ExtremePayloads) {
  const Image zeros(4, 3, 0.0), ones(4, 3, 1.0);
  EXPECT_EQ(parse_pgm(encode_pgm(zeros)), zeros);
  EXPECT_EQ(parse_pgm(encode_pgm(ones)), ones);
}

TEST(Pgm, SixteenBitIsBigEndian) {
  const std::string bytes = std::string("P5 2 1 65535\n") + std::string("\x01\x00\xff\xff", 4);
  const Image img = parse_pgm(bytes);
  EXPECT_DOUBLE_EQ(img.data()[0], 256.0 / 65535.0);
  EXPECT_EQ(img.data()[1], 1.0);
  const Image smooth = testing::smooth_image(9, 9, 1.5, 3, 0.0, 1.0);
  const Image back = parse_pgm(encode_pgm(smooth, 65535));
  for (std::size_t i = 0; i < smooth.size(); ++i) {
    EXPECT_LE(std::abs(back.data()[i] - smooth.data()[i]), 0.5 / 65535.0 + 1e-15);
  }
}

TEST(Pgm, FilesRoundTripAndListSorted) {
  const auto dir = std::filesystem::temp_directory_path() / "tgrasta_io_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  const Image img(3, 2, 0.4);
  write_pgm(img, dir / "b.pgm");
  write_pgm(img, dir / "a.pgm");
  write_file(dir / "notes.txt", "x");
  const auto files = list_pgm_files(dir);
  ASSERT_EQ(files.size(), 2u);
  EXPECT_EQ(files[0].filename(), "a.pgm");
  EXPECT_EQ(read_pgm(files[1]), parse_pgm(encode_pgm(img)));
  EXPECT_EQ(error_code_of([&] { read_pgm(dir / "missing.pgm"); }), ErrorCode::IoError);
  std::filesystem::remove_all(dir);
}

TEST(Numbers, ShortestRoundTrip) {
  for (double v : {0.1, -2.5e-300, 1.0 / 3.0, 123456789.125}) {
    EXPECT_EQ(parse_double(format_double(v), "v"), v);
  }
  EXPECT_EQ(format_double(-0.0), "0");
  EXPECT_EQ(error_code_of([] { format_double(std::numeric_limits<double>::quiet_NaN()); }),
            ErrorCode::NonFinite);
  EXPECT_EQ(error_code_of([] { parse_double("1.5x", "v"); }), ErrorCode::ParseError);
  EXPECT_EQ(error_code_of([] { parse_integer("3.0", "n"); }), ErrorCode::ParseError);
}

TEST(Csv, EscapesAndParsesBack) {
  CsvWriter w({"id", "note"});
  w.row({"a", "plain"});
  w.row({"b,c", "say \"hi\"\nthen stop"});
  EXPECT_EQ(w.str(), "id,note\na,plain\n\"b,c\",\"say \"\"hi\"\"\nthen stop\"\n");
  const CsvTable t = parse_csv(w.str());
  ASSERT_EQ(t.size(), 3u);
  EXPECT_EQ(t[2][0], "b,c");
  EXPECT_EQ(t[2][1], "say \"hi\"\nthen stop");
  EXPECT_EQ(csv_column(t, "note"), 1u);
  EXPECT_EQ(error_code_of([&] { csv_column(t, "absent"); }), ErrorCode::ParseError);
}

TEST(Csv, AcceptsCrlfAndMissingFinalNewline) {
  const CsvTable t = parse_csv("x,y\r\n1,2");
  ASSERT_EQ(t.size(), 2u);
  EXPECT_EQ(t[1], (std::vector<std::string>{"1", "2"}));
  EXPECT_EQ(error_code_of([] { parse_csv("a,\"open"); }), ErrorCode::ParseError);
  EXPECT_EQ(error_code_of([] { parse_csv("a,b\"c\n"); }), ErrorCode::ParseError);
}

TEST(Csv, WriterRejectsWrongFieldCount) {
  CsvWriter w({"a", "b"});
  EXPECT_EQ(error_code_of([&] { w.row({"1"}); }), ErrorCode::DimensionMismatch);
}

TEST(Transforms, RoundTripIsExact) {
  CsvWriter w(transform_header(TransformGroup::Affine, "image_id"));
  const TransformParams a(TransformGroup::Affine,
                          (Eigen::VectorXd(6) << 1.01, -0.02, 0.03, 0.99, 1.0 / 3.0, -2.75).finished());
  const TransformParams b = TransformParams::identity(TransformGroup::Affine);
  w.row(transform_fields("f0", a));
  w.row(transform_fields("f1", b));
  const auto rows = parse_transforms(w.str());
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].id, "f0");
  EXPECT_EQ(rows[0].tau, a);
  EXPECT_EQ(rows[1].tau, b);
}

TEST(Transforms, RejectsRaggedRows) {
  EXPECT_EQ(error_code_of([] { parse_transforms("id,group,tx,ty\nf,translation,1\n"); }),
            ErrorCode::ParseError);
}

TEST(SubspaceFile, RoundTrip) {
  const Subspace u = init_random(17, 3, 21);
  const Subspace back = parse_subspace(encode_subspace(u));
  EXPECT_LE((back.basis() - u.basis()).norm(), 1e-14);
  EXPECT_EQ(error_code_of([] { parse_subspace("2 1\n1\n"); }), ErrorCode::ParseError);
  EXPECT_EQ(error_code_of([] { parse_subspace("1 1\n1\n2\n"); }), ErrorCode::ParseError);
}

TEST(ConfigFile, KeyValueLines) {
  const Config c = parse_config("# run\nrank = 5\n\n  seed=7   # trailing\nboundary = strict\n");
  EXPECT_EQ(c.size(), 3u);
  EXPECT_EQ(c.at("rank"), "5");
  EXPECT_EQ(c.at("seed"), "7");
  EXPECT_EQ(c.at("boundary"), "strict");
}

TEST(ConfigFile, RejectsMalformedLines) {
  EXPECT_EQ(error_code_of([] { parse_config("rank 5\n"); }), ErrorCode::ParseError);
  EXPECT_EQ(error_code_of([] { parse_config(" = 5\n"); }), ErrorCode::ParseError);
  EXPECT_EQ(error_code_of([] { parse_config("a = 1\na = 2\n"); }), ErrorCode::ParseError);
}

TEST(ImageExport, SignedMapsZeroToMidGray) {
  const Image img = signed_to_image(Eigen::Vector3d{-2.0, 0.0, 1.0}, 3, 1);
  EXPECT_EQ(img.data()[0], 0.0);
  EXPECT_DOUBLE_EQ(img.data()[1], 0.5);
  EXPECT_DOUBLE_EQ(img.data()[2], 0.75);
}

}  // namespace
}  // namespace tgrasta::io
