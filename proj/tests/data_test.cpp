#include "tigranet/data.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <set>

#include "support/test_util.hpp"
#include "tigranet/graph.hpp"

namespace tigranet {
namespace {

void write_raw(const std::string& path, const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

std::vector<unsigned char> idx_image_header(std::uint32_t count,
                                            std::uint32_t rows,
                                            std::uint32_t cols) {
  std::vector<unsigned char> b;
  for (std::uint32_t v : {0x00000803u, count, rows, cols}) {
    b.push_back(static_cast<unsigned char>(v >> 24));
    b.push_back(static_cast<unsigned char>(v >> 16));
    b.push_back(static_cast<unsigned char>(v >> 8));
    b.push_back(static_cast<unsigned char>(v));
  }
  return b;
}

std::vector<unsigned char> idx_label_header(std::uint32_t count) {
  std::vector<unsigned char> b;
  for (std::uint32_t v : {0x00000801u, count}) {
    b.push_back(static_cast<unsigned char>(v >> 24));
    b.push_back(static_cast<unsigned char>(v >> 16));
    b.push_back(static_cast<unsigned char>(v >> 8));
    b.push_back(static_cast<unsigned char>(v));
  }
  return b;
}

TEST(ReadIdx, HandCraftedFixtureScalesBytes) {
  testing::TempDir dir("tigranet-idx");
  auto img = idx_image_header(1, 2, 2);
  for (unsigned char byte : {0, 255, 128, 64}) img.push_back(byte);
  write_raw(dir.file("img.idx"), img);
  auto lab = idx_label_header(1);
  lab.push_back(7);
  write_raw(dir.file("lab.idx"), lab);

  const ImageDataset ds = read_idx(dir.file("img.idx"), dir.file("lab.idx"));
  ASSERT_EQ(ds.size(), 1u);
  EXPECT_EQ(ds.height, 2);
  EXPECT_EQ(ds.width, 2);
  EXPECT_EQ(ds.labels[0], 7);
  EXPECT_DOUBLE_EQ(ds.images[0][0], 0.0);
  EXPECT_DOUBLE_EQ(ds.images[0][1], 1.0);
  EXPECT_DOUBLE_EQ(ds.images[0][2], 128.0 / 255.0);
  EXPECT_DOUBLE_EQ(ds.images[0][3], 64.0 / 255.0);
}

TEST(ReadIdx, CountMismatchIsDistinctError) {
  testing::TempDir dir("tigranet-idx");
  auto img = idx_image_header(2, 1, 1);
  img.push_back(10);
  img.push_back(20);
  write_raw(dir.file("img.idx"), img);
  auto lab = idx_label_header(1);
  lab.push_back(0);
  write_raw(dir.file("lab.idx"), lab);
  try {
    read_idx(dir.file("img.idx"), dir.file("lab.idx"));
    FAIL() << "expected IdxError";
  } catch (const IdxError& e) {
    EXPECT_EQ(e.kind(), IdxError::Kind::count_mismatch);
  }
}

TEST(ReadIdx, BadMagicIsDistinctError) {
  testing::TempDir dir("tigranet-idx");
  std::vector<unsigned char> junk = {1, 2, 3, 4, 5, 6, 7, 8};
  write_raw(dir.file("img.idx"), junk);
  try {
    read_idx_images(dir.file("img.idx"));
    FAIL() << "expected IdxError";
  } catch (const IdxError& e) {
    EXPECT_EQ(e.kind(), IdxError::Kind::bad_magic);
  }
}

TEST(ReadIdx, TruncationIsDistinctError) {
  testing::TempDir dir("tigranet-idx");
  auto img = idx_image_header(2, 2, 2);
  img.push_back(1);  // 7 bytes short
  write_raw(dir.file("img.idx"), img);
  try {
    read_idx_images(dir.file("img.idx"));
    FAIL() << "expected IdxError";
  } catch (const IdxError& e) {
    EXPECT_EQ(e.kind(), IdxError::Kind::truncated);
  }
}

TEST(ReadIdx, MissingFileIsIoError) {
  try {
    read_idx_images("/nonexistent/file.idx");
    FAIL() << "expected IdxError";
  } catch (const IdxError& e) {
    EXPECT_EQ(e.kind(), IdxError::Kind::io);
  }
}

TEST(WriteIdx, RoundTripsBitwise) {
  testing::TempDir dir("tigranet-idx");
  ImageDataset ds;
  ds.height = 3;
  ds.width = 2;
  SplitMix64 rng(70);
  for (int i = 0; i < 5; ++i) {
    GraphSignal img(6);
    for (double& v : img) v = static_cast<double>(rng.below(256)) / 255.0;
    ds.images.push_back(img);
    ds.labels.push_back(static_cast<int>(rng.below(10)));
  }
  write_idx(ds, dir.file("img.idx"), dir.file("lab.idx"));
  const ImageDataset back = read_idx(dir.file("img.idx"), dir.file("lab.idx"));
  EXPECT_EQ(back.height, ds.height);
  EXPECT_EQ(back.width, ds.width);
  EXPECT_EQ(back.labels, ds.labels);
  ASSERT_EQ(back.images.size(), ds.images.size());
  for (std::size_t i = 0; i < ds.images.size(); ++i) {
    EXPECT_EQ(back.images[i], ds.images[i]);
  }
}

ImageDataset synthetic_source(int count, int height, int width,
                              std::uint64_t seed, int num_classes = 10) {
  ImageDataset ds;
  ds.height = height;
  ds.width = width;
  SplitMix64 rng(seed);
  for (int i = 0; i < count; ++i) {
    ds.images.push_back(tigranet::testing::random_signal(
        static_cast<std::size_t>(height) * width, rng, 0.0, 1.0));
    ds.labels.push_back(static_cast<int>(rng.below(static_cast<std::uint64_t>(num_classes))));
  }
  return ds;
}

TEST(MakeMnist012, SplitSizesAndLabels) {
  const ImageDataset source = synthetic_source(3000, 6, 6, 71);
  const DatasetSplits splits = make_mnist012(source, 5);
  EXPECT_EQ(splits.train.size(), 500u);
  EXPECT_EQ(splits.val.size(), 100u);
  EXPECT_EQ(splits.test.size(), 100u);
  for (const ImageDataset* ds : {&splits.train, &splits.val, &splits.test}) {
    for (int label : ds->labels) {
      EXPECT_GE(label, 0);
      EXPECT_LE(label, 2);
    }
  }
}

TEST(MakeMnist012, SplitsAreDisjoint) {
  const ImageDataset source = synthetic_source(3000, 6, 6, 72);
  const DatasetSplits splits = make_mnist012(source, 6);
  std::set<int> seen;
  for (const auto* manifest :
       {&splits.train_manifest, &splits.val_manifest, &splits.test_manifest}) {
    for (const ManifestEntry& e : *manifest) {
      EXPECT_TRUE(seen.insert(e.source_index).second)
          << "duplicate source index " << e.source_index;
    }
  }
}

TEST(MakeMnist012, DeterministicPerSeed) {
  const ImageDataset source = synthetic_source(3000, 6, 6, 73);
  const DatasetSplits a = make_mnist012(source, 9);
  const DatasetSplits b = make_mnist012(source, 9);
  for (std::size_t i = 0; i < a.train_manifest.size(); ++i) {
    EXPECT_EQ(a.train_manifest[i].source_index, b.train_manifest[i].source_index);
  }
}

TEST(MakeMnist012, InsufficientSourceRejected) {
  const ImageDataset source = synthetic_source(100, 6, 6, 74);
  EXPECT_THROW(make_mnist012(source, 1), std::invalid_argument);
}

TEST(MakeVariant, CanvasSizesMatchVariants) {
  const ImageDataset source = synthetic_source(300, 28, 28, 75);
  const SubsampleCaps caps{60, 20, 20};
  const DatasetSplits rot = make_variant(source, VariantKind::rot, 3, caps);
  EXPECT_EQ(rot.train.height, 26);
  EXPECT_EQ(rot.train.width, 26);
  EXPECT_EQ(rot.test.height, 26);
  const DatasetSplits trans = make_variant(source, VariantKind::trans, 3, caps);
  EXPECT_EQ(trans.train.height, 34);
  EXPECT_EQ(trans.train.width, 34);
}

TEST(MakeVariant, DropsLabelNineAndCapsSizes) {
  const ImageDataset source = synthetic_source(600, 28, 28, 76);
  const SubsampleCaps caps{200, 30, 100};
  const DatasetSplits splits = make_variant(source, VariantKind::rot, 4, caps);
  EXPECT_EQ(splits.train.size(), 200u);
  EXPECT_EQ(splits.val.size(), 30u);
  EXPECT_EQ(splits.test.size(), 100u);
  for (const ImageDataset* ds : {&splits.train, &splits.val, &splits.test}) {
    for (int label : ds->labels) EXPECT_NE(label, 9);
  }
}

TEST(MakeVariant, TrainIsPlainAndTestCarriesTransformParams) {
  const ImageDataset source = synthetic_source(300, 28, 28, 77);
  const SubsampleCaps caps{50, 10, 40};
  const DatasetSplits rot = make_variant(source, VariantKind::rot, 5, caps);
  for (const ManifestEntry& e : rot.train_manifest) {
    EXPECT_EQ(e.kind, TransformKind::none);
  }
  for (const ManifestEntry& e : rot.test_manifest) {
    EXPECT_EQ(e.kind, TransformKind::rotate);
    EXPECT_GE(e.param1, 0.0);
    EXPECT_LT(e.param1, 360.0);
  }
  const DatasetSplits trans = make_variant(source, VariantKind::trans, 5, caps);
  for (const ManifestEntry& e : trans.test_manifest) {
    EXPECT_EQ(e.kind, TransformKind::translate);
    EXPECT_LE(std::abs(e.param1), 6.0);
    EXPECT_LE(std::abs(e.param2), 6.0);
  }
}

TEST(MakeVariant, DeterministicTransforms) {
  const ImageDataset source = synthetic_source(300, 28, 28, 78);
  const SubsampleCaps caps{50, 10, 40};
  const DatasetSplits a = make_variant(source, VariantKind::rot, 8, caps);
  const DatasetSplits b = make_variant(source, VariantKind::rot, 8, caps);
  for (std::size_t i = 0; i < a.test_manifest.size(); ++i) {
    EXPECT_EQ(a.test_manifest[i].param1, b.test_manifest[i].param1);
    EXPECT_EQ(a.test.images[i], b.test.images[i]);
  }
}

TEST(MakeVariant, InsufficientSourceRejected) {
  const ImageDataset source = synthetic_source(50, 28, 28, 79);
  EXPECT_THROW(
      make_variant(source, VariantKind::rot, 1, SubsampleCaps{100, 10, 10}),
      std::invalid_argument);
}

TEST(RotateImage, ZeroAngleIsIdentity) {
  SplitMix64 rng(80);
  const GraphSignal img = tigranet::testing::random_signal(25, rng, 0.0, 1.0);
  EXPECT_EQ(rotate_image(img, 5, 5, 0.0), img);
}

TEST(RotateImage, QuarterTurnOnTwoByTwo) {
  // [[a,b],[c,d]] rotated 90 ccw -> [[b,d],[a,c]]
  const GraphSignal img = {1.0, 2.0, 3.0, 4.0};
  EXPECT_EQ(rotate_image(img, 2, 2, 90.0), (GraphSignal{2.0, 4.0, 1.0, 3.0}));
}

TEST(RotateImage, FourQuarterTurnsCompose) {
  SplitMix64 rng(81);
  const GraphSignal img = tigranet::testing::random_signal(49, rng, 0.0, 1.0);
  GraphSignal rotated = img;
  for (int i = 0; i < 4; ++i) rotated = rotate_image(rotated, 7, 7, 90.0);
  EXPECT_EQ(rotated, img);
  EXPECT_EQ(rotate_image(rotate_image(img, 7, 7, 90.0), 7, 7, 90.0),
            rotate_image(img, 7, 7, 180.0));
}

TEST(RotateImage, QuarterTurnMatchesGridAutomorphism) {
  SplitMix64 rng(82);
  const GraphSignal img = tigranet::testing::random_signal(36, rng, 0.0, 1.0);
  // rotate_image(90) sends (r,c) <- (c, n-1-r), which is the rot270 vertex map
  // in out(p(i)) = in(i) form.
  const auto perm = make_automorphism(AutomorphismKind::rot270, 6, 6);
  EXPECT_EQ(rotate_image(img, 6, 6, 90.0), apply_automorphism(perm, img));
}

TEST(RotateImage, BilinearStaysInRangeAndKeepsMass) {
  SplitMix64 rng(83);
  GraphSignal img(121, 0.0);
  // Interior blob only, so rotation cannot clip content.
  for (int r = 4; r <= 6; ++r) {
    for (int c = 4; c <= 6; ++c) {
      img[static_cast<std::size_t>(vertex_index(r, c, 11))] = rng.uniform01();
    }
  }
  const GraphSignal out = rotate_image(img, 11, 11, 37.5);
  for (double v : out) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(RotateImage, NonSquareRejected) {
  EXPECT_THROW(rotate_image(GraphSignal(6, 0.0), 2, 3, 90.0),
               std::invalid_argument);
}

TEST(TranslateImage, ZeroShiftIsIdentity) {
  SplitMix64 rng(84);
  const GraphSignal img = tigranet::testing::random_signal(30, rng, 0.0, 1.0);
  EXPECT_EQ(translate_image(img, 5, 6, 0, 0), img);
}

TEST(TranslateImage, ShiftThenInverseRestoresInteriorContent) {
  GraphSignal img(64, 0.0);
  for (int r = 3; r <= 4; ++r) {
    for (int c = 3; c <= 4; ++c) {
      img[static_cast<std::size_t>(vertex_index(r, c, 8))] = 0.7;
    }
  }
  const GraphSignal shifted = translate_image(img, 8, 8, 2, -1);
  EXPECT_EQ(translate_image(shifted, 8, 8, -2, 1), img);
}

TEST(TranslateImage, MassPreservedWhileInBounds) {
  GraphSignal img(49, 0.0);
  img[static_cast<std::size_t>(vertex_index(3, 3, 7))] = 0.9;
  img[static_cast<std::size_t>(vertex_index(3, 4, 7))] = 0.4;
  double before = 0.0;
  for (double v : img) before += v;
  const GraphSignal shifted = translate_image(img, 7, 7, 2, 2);
  double after = 0.0;
  for (double v : shifted) after += v;
  EXPECT_DOUBLE_EQ(after, before);
}

TEST(TranslateImage, BoundExceededRejected) {
  EXPECT_THROW(translate_image(GraphSignal(49, 0.0), 7, 7, 7, 0),
               std::invalid_argument);
  EXPECT_THROW(translate_image(GraphSignal(49, 0.0), 7, 7, 0, -7),
               std::invalid_argument);
}

TEST(ResizeBilinear, PreservesConstantImages) {
  const GraphSignal img(784, 0.25);
  const GraphSignal out = resize_bilinear(img, 28, 28, 26, 26);
  ASSERT_EQ(out.size(), 676u);
  for (double v : out) EXPECT_NEAR(v, 0.25, 1e-12);
}

TEST(CenterPad, PlacesContentCentrally) {
  GraphSignal img(4, 1.0);
  const GraphSignal out = center_pad(img, 2, 2, 4, 4);
  ASSERT_EQ(out.size(), 16u);
  double total = 0.0;
  for (double v : out) total += v;
  EXPECT_DOUBLE_EQ(total, 4.0);
  EXPECT_DOUBLE_EQ(out[static_cast<std::size_t>(vertex_index(1, 1, 4))], 1.0);
  EXPECT_DOUBLE_EQ(out[static_cast<std::size_t>(vertex_index(2, 2, 4))], 1.0);
}

}  // namespace
}  // namespace tigranet
