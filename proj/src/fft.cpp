#include "phaselattice/fft.hpp"

#include <fftw3.h>

#include <mutex>
#include <stdexcept>

namespace phaselattice {

namespace {

// Only fftw_execute is thread safe; planning and destruction are serialised.
std::mutex& plan_mutex()
{
    static std::mutex m;
    return m;
}

fftw_complex* as_fftw(std::vector<std::complex<double>>& v)
{
    return reinterpret_cast<fftw_complex*>(v.data());
}

void run(fftw_plan plan)
{
    if (plan == nullptr)
        throw std::runtime_error("FFTW planning failed");
    fftw_execute(plan);
    std::lock_guard<std::mutex> lock(plan_mutex());
    fftw_destroy_plan(plan);
}

}  // namespace

void fft_inplace(std::vector<std::complex<double>>& data, bool inverse)
{
    if (data.empty())
        return;
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(plan_mutex());
        plan = fftw_plan_dft_1d(static_cast<int>(data.size()), as_fftw(data), as_fftw(data),
                                inverse ? FFTW_BACKWARD : FFTW_FORWARD, FFTW_ESTIMATE);
    }
    run(plan);
}

void fft2_inplace(std::vector<std::complex<double>>& data, int rows, int cols, bool inverse)
{
    if (static_cast<std::size_t>(rows) * cols != data.size())
        throw std::invalid_argument("fft2: size mismatch");
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(plan_mutex());
        plan = fftw_plan_dft_2d(rows, cols, as_fftw(data), as_fftw(data), inverse ? FFTW_BACKWARD : FFTW_FORWARD,
                                FFTW_ESTIMATE);
    }
    run(plan);
}

void fft_batch(std::vector<std::complex<double>>& data, int n, int count, bool inverse)
{
    if (static_cast<std::size_t>(n) * count != data.size())
        throw std::invalid_argument("fft_batch: size mismatch");
    if (data.empty())
        return;
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(plan_mutex());
        plan = fftw_plan_many_dft(1, &n, count, as_fftw(data), nullptr, 1, n, as_fftw(data), nullptr, 1, n,
                                  inverse ? FFTW_BACKWARD : FFTW_FORWARD, FFTW_ESTIMATE);
    }
    run(plan);
}

}  // namespace phaselattice
