// Times the OpenMP kernels against the serial reference versions at the
// default model shapes. Usage: bench_kernels [rows] [repeats]

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <vector>

#include "mtod/kernels.hpp"
#include "mtod/rng.hpp"

namespace k = mtod::kernels;

namespace {

std::vector<float> random_vec(std::size_t n, mtod::Rng& rng) {
    std::vector<float> v(n);
    for (auto& x : v) x = static_cast<float>(rng.normal());
    return v;
}

double time_ms(const std::function<void()>& fn, int repeats) {
    fn();  // warm-up
    const auto t0 = std::chrono::steady_clock::now();
    for (int r = 0; r < repeats; ++r) fn();
    const auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count() / repeats;
}

void report(const char* name, double parallel, double serial, double flops) {
    std::printf("%-24s parallel %9.3f ms  serial %9.3f ms  speedup %5.2fx  %6.2f GFLOP/s\n", name,
                parallel, serial, serial / parallel, flops / (parallel * 1e6));
}

}  // namespace

int main(int argc, char** argv) {
    const int rows = argc > 1 ? std::atoi(argv[1]) : 128;
    const int repeats = argc > 2 ? std::atoi(argv[2]) : 20;
    const int d = 128, f = 512, heads = 4;
    mtod::Rng rng(7);
    std::printf("threads %d, rows %d, repeats %d\n", omp_get_max_threads(), rows, repeats);

    const auto in = random_vec(static_cast<std::size_t>(rows) * d, rng);
    const auto w = random_vec(static_cast<std::size_t>(d) * f, rng);
    const auto b = random_vec(f, rng);
    const auto dout = random_vec(static_cast<std::size_t>(rows) * f, rng);
    std::vector<float> out(static_cast<std::size_t>(rows) * f);
    std::vector<float> din(in.size());
    std::vector<float> dw(w.size()), db(b.size());
    const double mm = 2.0 * rows * d * f;

    report("matmul",
           time_ms([&] { k::matmul<float>(out, in, w, b, rows, d, f); }, repeats),
           time_ms([&] { k::reference::matmul<float>(out, in, w, b, rows, d, f); }, repeats), mm);
    report("matmul_backward_input",
           time_ms([&] { k::matmul_backward_input<float>(din, dout, w, rows, d, f); }, repeats),
           time_ms([&] { k::reference::matmul_backward_input<float>(din, dout, w, rows, d, f); },
                   repeats),
           mm);
    report("matmul_backward_weight",
           time_ms([&] { k::matmul_backward_weight<float>(dw, db, in, dout, rows, d, f); },
                   repeats),
           time_ms([&] { k::reference::matmul_backward_weight<float>(dw, db, in, dout, rows, d, f); },
                   repeats),
           mm);

    const auto qkv = random_vec(static_cast<std::size_t>(rows) * 3 * d, rng);
    const auto datt = random_vec(static_cast<std::size_t>(rows) * d, rng);
    std::vector<float> att(static_cast<std::size_t>(rows) * d);
    std::vector<float> probs(static_cast<std::size_t>(heads) * rows * rows);
    std::vector<float> dqkv(qkv.size());
    const double at = 2.0 * rows * rows * d;  // causal half of QK^T plus PV
    report("attention",
           time_ms([&] { k::attention<float>(att, probs, qkv, rows, d, heads); }, repeats),
           time_ms([&] { k::reference::attention<float>(att, probs, qkv, rows, d, heads); }, repeats),
           at);
    report("attention_backward",
           time_ms([&] { k::attention_backward<float>(dqkv, datt, probs, qkv, rows, d, heads); },
                   repeats),
           time_ms([&] {
               k::reference::attention_backward<float>(dqkv, datt, probs, qkv, rows, d, heads);
           }, repeats),
           2 * at);
    return 0;
}
