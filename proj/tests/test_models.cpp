#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <functional>
#include <string>

#include "rawcycle/bayer.hpp"
#include "rawcycle/errors.hpp"
#include "rawcycle/models.hpp"
#include "support/fd_check.hpp"
#include "support/test_util.hpp"

using namespace rawcycle;
using namespace rawcycle::testsupport;

namespace {

// Small configs keep the finite-difference sweeps fast.
CycleConfig tiny_cycle(int n_rrg_decoder = 1) {
  CycleConfig cfg;
  cfg.rgb2raw = {1, 1, 8};
  cfg.raw2rgb = {n_rrg_decoder, 1, 8};
  cfg.color_corr = {1, 1, 8, 12.0};
  cfg.reduction = 8;
  return cfg;
}

void randomize(ParamStore& ps, Rng& rng, double lo = -0.2, double hi = 0.2) {
  for (const std::string& name : ps.names()) {
    Tensor& t = ps.tensor(name);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
  }
}

void zero_prefix(ParamStore& ps, const std::string& prefix) {
  for (const std::string& name : ps.names())
    if (name.compare(0, prefix.size(), prefix) == 0) ps.tensor(name).fill(0.0);
}

// Analytic layer-spec parameter counts.
std::size_t conv_count(int k, int ic, int oc) {
  return static_cast<std::size_t>(k) * k * ic * oc + oc;
}
std::size_t ca_count(int c, int r) {
  return conv_count(1, c, c / r) + conv_count(1, c / r, c);
}
std::size_t sa_count() { return conv_count(3, 2, 1); }
std::size_t dab_count(int c, int r) {
  return 2 * conv_count(3, c, c) + ca_count(c, r) + sa_count() + conv_count(1, 2 * c, c);
}
std::size_t rrg_count(int c, int r, int n_dab) {
  return n_dab * dab_count(c, r) + conv_count(3, c, c);
}
std::size_t raw_denoiser_count(int c, int r, int n_rrg, int n_dab) {
  return conv_count(3, 8, c) + n_rrg * rrg_count(c, r, n_dab) + conv_count(3, c, 4);
}

}  // namespace

TEST_CASE("config validation names the offending field") {
  CHECK_NOTHROW(validate(CycleConfig{}));
  CHECK_NOTHROW(validate(toy_cycle_config()));
  CHECK_NOTHROW(validate(DenoiserConfig{}));
  CHECK_NOTHROW(validate(toy_denoiser_config(DenoiserMode::kRaw)));

  CycleConfig bad = tiny_cycle();
  bad.rgb2raw.n_rrg = 0;
  CHECK_THROWS_WITH_AS(validate(bad), "rgb2raw.n_rrg must be at least 1", ConfigError);

  bad = tiny_cycle();
  bad.raw2rgb.channels = 12;  // not divisible by reduction 8
  CHECK_THROWS_AS(validate(bad), ConfigError);

  bad = tiny_cycle();
  bad.color_corr.channels = 16;
  CHECK_THROWS_WITH_AS(validate(bad),
                       "color_corr.channels must equal raw2rgb.channels for the color gate",
                       ConfigError);

  bad = tiny_cycle();
  bad.color_corr.blur_sigma = 0.0;
  CHECK_THROWS_AS(validate(bad), ConfigError);

  DenoiserConfig dbad = toy_denoiser_config(DenoiserMode::kSrgb);
  dbad.n_dab = 0;
  CHECK_THROWS_AS(validate(dbad), ConfigError);

  CHECK(denoiser_mode_from_string("raw") == DenoiserMode::kRaw);
  CHECK(denoiser_mode_from_string("srgb") == DenoiserMode::kSrgb);
  CHECK_THROWS_AS(denoiser_mode_from_string("linear"), ConfigError);
}

TEST_CASE("rgb2raw with a zeroed output conv predicts all-zero images") {
  Rng rng(501);
  Tensor img = random3(rng, 8, 8, 3);
  ParamStore ps(501);
  CycleConfig cfg = tiny_cycle();
  {
    Graph warm(&ps);
    rgb2raw_forward(warm, warm.input(img), cfg);
  }
  zero_prefix(ps, "rgb2raw/m1");
  Graph g(&ps);
  Rgb2RawOut out = rgb2raw_forward(g, g.input(img), cfg);
  CHECK(g.value(out.dem_hat).max_value() == 0.0);
  CHECK(g.value(out.dem_hat).min_value() == 0.0);
  CHECK(g.value(out.raw_hat).max_value() == 0.0);
}

TEST_CASE("rgb2raw mosaic output samples the demosaicked prediction site by site") {
  Rng rng(502);
  Tensor img = random3(rng, 10, 12, 3);
  ParamStore ps(502);
  CycleConfig cfg = tiny_cycle();
  Graph g(&ps);
  Rgb2RawOut out = rgb2raw_forward(g, g.input(img), cfg);
  const Tensor& dem = g.value(out.dem_hat);
  const Tensor& raw = g.value(out.raw_hat);

  // Every site must carry the RGGB-selected channel of dem_hat, bit for bit.
  for (int i = 0; i < raw.h(); ++i)
    for (int j = 0; j < raw.w(); ++j) {
      const int ch = (i % 2 == 0) ? (j % 2 == 0 ? 0 : 1) : (j % 2 == 0 ? 1 : 2);
      REQUIRE(raw.at(i, j, 0) == dem.at(i, j, ch));
    }
  RawMosaic oracle = mosaic(dem, BayerPattern::kRggb);
  CHECK(max_abs_diff(raw, oracle.data) == 0.0);
}

TEST_CASE("rgb2raw rejects malformed inputs") {
  ParamStore ps(503);
  CycleConfig cfg = tiny_cycle();
  Graph g(&ps);
  CHECK_THROWS_AS(rgb2raw_forward(g, g.input(Tensor::make3(7, 8, 3)), cfg), DimensionError);
  CHECK_THROWS_AS(rgb2raw_forward(g, g.input(Tensor::make3(8, 6, 1)), cfg), DimensionError);
}

TEST_CASE("rgb2raw head passes finite-difference gradient checks") {
  Rng rng(504);
  for (int trial = 0; trial < 5; ++trial) {
    ParamStore ps(504 + trial);
    CycleConfig cfg = tiny_cycle();
    Tensor img = random3(rng, 8, 8, 3);
    Tensor zero = Tensor::make3(8, 8, 1);
    {
      Graph warm(&ps);
      rgb2raw_forward(warm, warm.input(img), cfg);
    }
    randomize(ps, rng);
    auto build = [&](Graph& g) {
      Rgb2RawOut out = rgb2raw_forward(g, g.input(img), cfg);
      return g.mean_abs_diff(out.raw_hat, g.input(zero));
    };
    auto eval = [&]() {
      Graph g(&ps);
      return g.value(build(g))[0];
    };
    ps.zero_grads();
    {
      Graph g(&ps);
      g.backward(build(g));
    }
    FdReport r = fd_check_params(ps, eval, 1e-5, "rgb2raw/m0");
    REQUIRE(r.max_rel_err < 1e-4);
  }
}

TEST_CASE("color branch with a zeroed final conv sits at one half") {
  Rng rng(511);
  Tensor img = random3(rng, 8, 8, 3);
  ParamStore ps(511);
  CycleConfig cfg = tiny_cycle();
  {
    Graph warm(&ps);
    color_correction(warm, img, cfg);
  }
  zero_prefix(ps, "color/m4");
  Graph g(&ps);
  const Tensor& t = g.value(color_correction(g, img, cfg));
  CHECK(t.h() == 4);
  CHECK(t.w() == 4);
  CHECK(t.c() == 8);
  CHECK(t.min_value() == 0.5);
  CHECK(t.max_value() == 0.5);
}

TEST_CASE("color branch keeps a spatially constant input spatially constant") {
  Rng rng(512);
  ParamStore ps(512);
  CycleConfig cfg = tiny_cycle();
  Tensor img = Tensor::make3(12, 12, 3);
  for (int k = 0; k < 3; ++k)
    for (int i = 0; i < 12; ++i)
      for (int j = 0; j < 12; ++j) img.at(i, j, k) = 0.2 + 0.3 * k;
  {
    Graph warm(&ps);
    color_correction(warm, img, cfg);
  }
  randomize(ps, rng);
  Graph g(&ps);
  const Tensor& t = g.value(color_correction(g, img, cfg));
  for (int k = 0; k < t.c(); ++k)
    for (int i = 0; i < t.h(); ++i)
      for (int j = 0; j < t.w(); ++j)
        REQUIRE(t.at(i, j, k) == doctest::Approx(t.at(0, 0, k)).epsilon(1e-12));
}

TEST_CASE("color branch output stays inside the unit interval") {
  Rng rng(513);
  CycleConfig cfg = tiny_cycle();
  // Moderate weights: the gate sits strictly inside (0,1).
  for (int trial = 0; trial < 10; ++trial) {
    ParamStore ps(513 + trial);
    Tensor img = random3(rng, 8, 8, 3);
    {
      Graph warm(&ps);
      color_correction(warm, img, cfg);
    }
    randomize(ps, rng, -0.15, 0.15);
    Graph g(&ps);
    const Tensor& t = g.value(color_correction(g, img, cfg));
    REQUIRE(t.min_value() > 0.0);
    REQUIRE(t.max_value() < 1.0);
  }
  // Extreme weights can drive the sigmoid into double-precision saturation,
  // where the bound is attained exactly; it is never exceeded.
  for (int trial = 0; trial < 10; ++trial) {
    ParamStore ps(613 + trial);
    Tensor img = random3(rng, 8, 8, 3);
    {
      Graph warm(&ps);
      color_correction(warm, img, cfg);
    }
    randomize(ps, rng, -3.0, 3.0);
    Graph g(&ps);
    const Tensor& t = g.value(color_correction(g, img, cfg));
    REQUIRE(t.min_value() >= 0.0);
    REQUIRE(t.max_value() <= 1.0);
  }
}

TEST_CASE("forcing the color gate to zero or one obeys the attention law") {
  Rng rng(521);
  CycleConfig cfg = tiny_cycle(2);  // one group before the gate, one after
  Tensor raw = random3(rng, 8, 8, 1);
  ParamStore ps(521);
  {
    Graph warm(&ps);
    warm.pixel_shuffle(warm.input(Tensor::make3(4, 4, 12)), 2);  // no params; just exercise
    Value t_color = warm.input(Tensor::make3(4, 4, 8));
    raw2rgb_forward(warm, warm.input(raw), t_color, cfg);
  }
  randomize(ps, rng);

  // Hand-assembled decoder around an explicit gate, sharing parameter names
  // with raw2rgb_forward so both read identical weights.
  auto by_hand = [&](double gate) {
    Graph g(&ps);
    Value t = conv_layer(g, "raw2rgb/m2", g.pack_rggb(g.input(raw)), 8, 3);
    t = rrg(g, "raw2rgb/rrg0", t, 1, 8);
    if (gate == 1.0) t = g.scale_const(t, 2.0);
    t = rrg(g, "raw2rgb/rrg1", t, 1, 8);
    return g.value(g.pixel_shuffle(conv_layer(g, "raw2rgb/m5", t, 12, 3), 2));
  };
  auto forced = [&](double gate) {
    Graph g(&ps);
    Value t_color = g.input(Tensor::make3(4, 4, 8, gate));
    return g.value(raw2rgb_forward(g, g.input(raw), t_color, cfg));
  };

  CHECK(max_abs_diff(forced(0.0), by_hand(0.0)) == 0.0);
  CHECK(max_abs_diff(forced(1.0), by_hand(1.0)) == 0.0);
}

TEST_CASE("raw2rgb output returns to the mosaic resolution over random even sizes") {
  Rng rng(522);
  CycleConfig cfg = tiny_cycle();
  for (int trial = 0; trial < 6; ++trial) {
    const int h = 2 * (2 + static_cast<int>(rng.below(4)));
    const int w = 2 * (2 + static_cast<int>(rng.below(4)));
    ParamStore ps(522);
    Graph g(&ps);
    Tensor raw = random3(rng, h, w, 1);
    Value t_color = g.input(random3(rng, h / 2, w / 2, 8));
    const Tensor& out = g.value(raw2rgb_forward(g, g.input(raw), t_color, cfg));
    CHECK(out.h() == h);
    CHECK(out.w() == w);
    CHECK(out.c() == 3);
  }
}

TEST_CASE("raw2rgb rejects a color gate on the wrong grid") {
  Rng rng(523);
  ParamStore ps(523);
  CycleConfig cfg = tiny_cycle();
  Graph g(&ps);
  Tensor raw = random3(rng, 8, 8, 1);
  CHECK_THROWS_AS(
      raw2rgb_forward(g, g.input(raw), g.input(Tensor::make3(3, 4, 8)), cfg),
      DimensionError);
  CHECK_THROWS_AS(
      raw2rgb_forward(g, g.input(raw), g.input(Tensor::make3(4, 4, 16)), cfg),
      DimensionError);
  CHECK_THROWS_AS(raw2rgb_forward(g, g.input(Tensor::make3(8, 8, 4)),
                                  g.input(Tensor::make3(4, 4, 8)), cfg),
                  DimensionError);
}

TEST_CASE("cycle with the switch off is deterministic and preserves resolution") {
  Rng rng(531);
  CycleConfig cfg = tiny_cycle();
  for (int trial = 0; trial < 3; ++trial) {
    const int h = 2 * (2 + static_cast<int>(rng.below(3)));
    const int w = 2 * (2 + static_cast<int>(rng.below(3)));
    Tensor img = random3(rng, h, w, 3);
    ParamStore ps(531);
    CycleTensors a = run_cycle(ps, img, NoiseSwitch::off(), cfg);
    CycleTensors b = run_cycle(ps, img, NoiseSwitch::off(), cfg);
    CHECK(a.rgb_hat.h() == h);
    CHECK(a.rgb_hat.w() == w);
    CHECK(a.rgb_hat.c() == 3);
    CHECK(max_abs_diff(a.rgb_hat, b.rgb_hat) == 0.0);
    CHECK(max_abs_diff(a.raw_hat.data, a.raw_decoder_in.data) == 0.0);
  }
}

TEST_CASE("a zero-level noise switch reproduces the switched-off cycle") {
  Rng rng(532);
  Tensor img = random3(rng, 8, 8, 3);
  ParamStore ps(532);
  CycleConfig cfg = tiny_cycle();
  CycleTensors off = run_cycle(ps, img, NoiseSwitch::off(), cfg);
  Rng noise_rng(99);
  CycleTensors zero =
      run_cycle(ps, img, NoiseSwitch::with_params({0.0, 0.0}), cfg, &noise_rng);
  CHECK(max_abs_diff(off.rgb_hat, zero.rgb_hat) == 0.0);
  CHECK(max_abs_diff(off.raw_decoder_in.data, zero.raw_decoder_in.data) == 0.0);
  CHECK_THROWS_AS(run_cycle(ps, img, NoiseSwitch::with_params({0.01, 0.001}), cfg),
                  ArgumentError);
}

TEST_CASE("a residue switch feeds the decoder the replayed noisy mosaic") {
  Rng rng(533);
  Tensor img = random3(rng, 8, 8, 3);
  ParamStore ps(533);
  CycleConfig cfg = tiny_cycle();
  CycleTensors base = run_cycle(ps, img, NoiseSwitch::off(), cfg);

  RawMosaic noisy = base.raw_hat;
  for (std::size_t i = 0; i < noisy.data.size(); ++i)
    noisy.data[i] += rng.uniform(-0.05, 0.05);
  NoiseResidue residue = extract_residue(noisy, base.raw_hat);

  CycleTensors replay = run_cycle(ps, img, NoiseSwitch::with_residue(residue), cfg);
  CHECK(max_abs_diff(replay.raw_decoder_in.data,
                     apply_residue(base.raw_hat, residue).data) == 0.0);
  CHECK(max_abs_diff(replay.raw_decoder_in.data, noisy.data) < 5e-16);

  NoiseResidue bad{Tensor::make3(4, 4, 1)};
  CHECK_THROWS_AS(run_cycle(ps, img, NoiseSwitch::with_residue(bad), cfg),
                  DimensionError);
}

TEST_CASE("freshly initialized denoisers are exact identities") {
  Rng rng(541);
  {
    ParamStore ps(541);
    DenoiserConfig cfg = toy_denoiser_config(DenoiserMode::kRaw);
    PackedRaw noisy{random3(rng, 6, 5, 4)};
    PackedRaw out = run_denoiser(ps, noisy, {0.01, 0.001}, cfg);
    CHECK(max_abs_diff(out.data, noisy.data) == 0.0);
  }
  {
    ParamStore ps(542);
    DenoiserConfig cfg = toy_denoiser_config(DenoiserMode::kSrgb);
    Tensor noisy = random3(rng, 7, 7, 3);
    CHECK(max_abs_diff(run_denoiser(ps, noisy, cfg), noisy) == 0.0);
  }
}

TEST_CASE("denoiser modes enforce their noise map contracts") {
  Rng rng(543);
  ParamStore ps(543);
  Graph g(&ps);
  Value packed = g.input(random3(rng, 4, 4, 4));
  Value map = g.input(random3(rng, 4, 4, 4));
  Value srgb = g.input(random3(rng, 4, 4, 3));

  DenoiserConfig raw_cfg = toy_denoiser_config(DenoiserMode::kRaw);
  DenoiserConfig srgb_cfg = toy_denoiser_config(DenoiserMode::kSrgb);
  CHECK_THROWS_AS(denoiser_forward(g, packed, std::nullopt, raw_cfg), ArgumentError);
  CHECK_THROWS_AS(denoiser_forward(g, srgb, map, srgb_cfg), ArgumentError);
  CHECK_THROWS_AS(denoiser_forward(g, srgb, map, raw_cfg), DimensionError);
  CHECK_THROWS_AS(denoiser_forward(g, packed, srgb, raw_cfg), DimensionError);
  CHECK_THROWS_AS(
      run_denoiser(ps, PackedRaw{g.value(packed)}, {0.01, 0.001}, srgb_cfg),
      ArgumentError);
  CHECK_THROWS_AS(run_denoiser(ps, g.value(srgb), raw_cfg), ArgumentError);
}

TEST_CASE("denoiser head passes finite-difference gradient checks") {
  Rng rng(544);
  DenoiserConfig cfg{1, 1, 8, 8, DenoiserMode::kRaw};
  for (int trial = 0; trial < 5; ++trial) {
    ParamStore ps(544 + trial);
    Tensor noisy = random3(rng, 4, 4, 4);
    Tensor map = random3(rng, 4, 4, 4, 0.01, 0.1);
    Tensor target = random3(rng, 4, 4, 4);
    {
      Graph warm(&ps);
      denoiser_forward(warm, warm.input(noisy), warm.input(map), cfg);
    }
    randomize(ps, rng);
    auto build = [&](Graph& g) {
      Value out = denoiser_forward(g, g.input(noisy), g.input(map), cfg);
      return g.mean_abs_diff(out, g.input(target));
    };
    auto eval = [&]() {
      Graph g(&ps);
      return g.value(build(g))[0];
    };
    ps.zero_grads();
    {
      Graph g(&ps);
      g.backward(build(g));
    }
    FdReport r = fd_check_params(ps, eval, 1e-5, "denoise_raw/head");
    REQUIRE(r.max_rel_err < 1e-4);
  }
}

TEST_CASE("parameter counts match the layer-spec formulas") {
  {
    ParamStore ps;
    Graph g(&ps);
    conv_layer(g, "c", g.input(Tensor::make3(4, 4, 4)), 16, 3);
    CHECK(count_params(ps) == 592);
  }
  for (int c : {16, 64}) {
    ParamStore ps;
    Graph g(&ps);
    dab(g, "d", g.input(Tensor::make3(4, 4, c)), 8);
    CHECK(count_params(ps) == dab_count(c, 8));
  }
  {
    ParamStore ps;
    Graph g(&ps);
    rrg(g, "r", g.input(Tensor::make3(4, 4, 16)), 3, 8);
    CHECK(count_params(ps) == rrg_count(16, 8, 3));
  }
  {
    ParamStore ps;
    DenoiserConfig cfg{4, 8, 16, 8, DenoiserMode::kRaw};
    Graph g(&ps);
    denoiser_forward(g, g.input(Tensor::make3(4, 4, 4)),
                     g.input(Tensor::make3(4, 4, 4)), cfg);
    CHECK(count_params(ps) == raw_denoiser_count(16, 8, 4, 8));
    CHECK(ps.count_scalars("denoise_raw/rrg0") == rrg_count(16, 8, 8));
    CHECK(ps.count_scalars("denoise_raw/head") == conv_count(3, 8, 16));
  }
}

TEST_CASE("two stores with the same seed initialize identically") {
  Rng rng(551);
  Tensor img = random3(rng, 8, 8, 3);
  CycleConfig cfg = tiny_cycle();
  ParamStore a(7), b(7);
  CycleTensors ra = run_cycle(a, img, NoiseSwitch::off(), cfg);
  CycleTensors rb = run_cycle(b, img, NoiseSwitch::off(), cfg);
  CHECK(max_abs_diff(ra.rgb_hat, rb.rgb_hat) == 0.0);
  for (const std::string& name : a.names())
    REQUIRE(max_abs_diff(a.tensor(name), b.tensor(name)) == 0.0);
}

TEST_CASE("the one-shot decoder helper insists on a unified mosaic") {
  Rng rng(552);
  ParamStore ps(552);
  CycleConfig cfg = tiny_cycle();
  RawMosaic raw{random3(rng, 8, 8, 1), BayerPattern::kBggr};
  Tensor ref = random3(rng, 8, 8, 3);
  CHECK_THROWS_AS(run_raw2rgb(ps, raw, ref, cfg), ArgumentError);
  raw.pattern = BayerPattern::kRggb;
  Tensor out = run_raw2rgb(ps, raw, ref, cfg);
  CHECK(out.h() == 8);
  CHECK(out.c() == 3);
}
