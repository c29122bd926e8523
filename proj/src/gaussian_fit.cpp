#include "prismlattice/analysis.hpp"
#include "prismlattice/error.hpp"

#include <Eigen/Dense>
#include <boost/math/distributions/fisher_f.hpp>

#include <algorithm>
#include <cmath>

namespace prismlattice {

namespace {

using Params = Eigen::Matrix<double, 5, 1>; // amplitude, x0, y0, sigma, offset
using Normal = Eigen::Matrix<double, 5, 5>;

constexpr int kMaxIterations = 200;

struct FitWindow {
    std::vector<double> dx, dy, v; // offsets from the candidate pixel
};

double evaluate(const FitWindow& w, const Params& p, Normal* jtj, Params* jtr)
{
    double cost = 0.0;
    if (jtj) {
        jtj->setZero();
        jtr->setZero();
    }
    const double inv_s2 = 1.0 / (p[3] * p[3]);
    for (std::size_t i = 0; i < w.v.size(); ++i) {
        const double ex = w.dx[i] - p[1];
        const double ey = w.dy[i] - p[2];
        const double r2 = ex * ex + ey * ey;
        const double g = std::exp(-0.5 * r2 * inv_s2);
        const double res = p[0] * g + p[4] - w.v[i];
        cost += res * res;
        if (jtj) {
            Params j;
            j << g, p[0] * g * ex * inv_s2, p[0] * g * ey * inv_s2, p[0] * g * r2 * inv_s2 / p[3], 1.0;
            jtj->noalias() += j * j.transpose();
            *jtr += j * res;
        }
    }
    return cost;
}

} // namespace

PeakFit fit_peak_gaussian(const Raster& image, const PeakCandidate& candidate, int window_radius)
{
    if (window_radius < 2)
        throw Error(ErrorKind::InvalidSpec, "fit window radius must be at least 2 pixels");
    const auto& img = image.values;
    if (candidate.x - window_radius < 0 || candidate.y - window_radius < 0 ||
        candidate.x + window_radius >= img.width() || candidate.y + window_radius >= img.height())
        throw Error(ErrorKind::OutOfBounds, "fit window leaves the image");

    FitWindow w;
    const int side = 2 * window_radius + 1;
    w.dx.reserve(side * side);
    w.dy.reserve(side * side);
    w.v.reserve(side * side);
    double vmin = img(candidate.x, candidate.y);
    double vmax = vmin;
    for (int j = -window_radius; j <= window_radius; ++j) {
        for (int i = -window_radius; i <= window_radius; ++i) {
            const double v = img(candidate.x + i, candidate.y + j);
            w.dx.push_back(i);
            w.dy.push_back(j);
            w.v.push_back(v);
            vmin = std::min(vmin, v);
            vmax = std::max(vmax, v);
        }
    }
    if (!(vmax - vmin > 1e-12 * std::max(1.0, std::abs(vmax))))
        throw Error(ErrorKind::IllConditioned, "fit window is flat");

    // Start from the background-subtracted centroid and second moment.
    double sw = 0.0, sx = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < w.v.size(); ++i) {
        const double wt = w.v[i] - vmin;
        sw += wt;
        sx += wt * w.dx[i];
        sy += wt * w.dy[i];
    }
    const double cx = sx / sw;
    const double cy = sy / sw;
    double m2 = 0.0;
    for (std::size_t i = 0; i < w.v.size(); ++i) {
        const double ex = w.dx[i] - cx;
        const double ey = w.dy[i] - cy;
        m2 += (w.v[i] - vmin) * (ex * ex + ey * ey);
    }
    const double sigma0 = std::clamp(std::sqrt(0.5 * m2 / sw), 0.5, static_cast<double>(window_radius));

    Params p;
    p << vmax - vmin, cx, cy, sigma0, vmin;

    Normal jtj;
    Params jtr;
    double cost = evaluate(w, p, &jtj, &jtr);
    double lambda = 1e-3;
    bool converged = false;
    int iter = 0;
    for (; iter < kMaxIterations && !converged; ++iter) {
        Normal a = jtj;
        a.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-300);
        const Params step = a.ldlt().solve(-jtr);
        if (!step.allFinite())
            throw Error(ErrorKind::IllConditioned, "singular normal equations");
        Params trial = p + step;
        if (trial[3] <= 0.0) {
            lambda *= 4.0;
            continue;
        }
        const double trial_cost = evaluate(w, trial, nullptr, nullptr);
        if (trial_cost <= cost) {
            const double gain = cost - trial_cost;
            p = trial;
            const bool small_step = step.cwiseAbs().maxCoeff() <= 1e-10 * (p.cwiseAbs().maxCoeff() + 1e-10);
            const bool flat_cost = gain <= 1e-15 * cost || trial_cost <= 1e-300;
            cost = evaluate(w, p, &jtj, &jtr);
            lambda = std::max(lambda / 3.0, 1e-12);
            converged = small_step || flat_cost;
        } else {
            lambda *= 4.0;
            if (lambda > 1e16)
                converged = true; // no descent direction left: at the minimum to machine precision
        }
    }
    if (!converged)
        throw Error(ErrorKind::NonConvergence, "Gaussian fit did not converge in " + std::to_string(kMaxIterations) + " iterations");

    const double limit = window_radius + 0.5;
    if (!(std::abs(p[1]) <= limit && std::abs(p[2]) <= limit) || !(p[3] > 0.0) || !(p[0] > 0.0))
        throw Error(ErrorKind::NonConvergence, "Gaussian fit left the window or lost its peak");

    Eigen::FullPivLU<Normal> lu(jtj);
    if (lu.rank() < 5 || lu.rcond() < 1e-14)
        throw Error(ErrorKind::IllConditioned, "fit covariance is singular");

    const int dof = static_cast<int>(w.v.size()) - 5;
    const double s2 = cost / dof;
    const Normal cov = lu.inverse() * s2;
    Eigen::Matrix2d cxy = cov.block<2, 2>(1, 1);
    const double lmax = Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(cxy, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
    const double fq = boost::math::quantile(boost::math::fisher_f_distribution<double>(2.0, dof), 0.95);
    const double ci_px = std::sqrt(std::max(0.0, 2.0 * fq * lmax));

    PeakFit fit;
    fit.center_px = {candidate.x + p[1], candidate.y + p[2]};
    fit.center = {image.origin.x + fit.center_px.x * image.pitch, image.origin.y + fit.center_px.y * image.pitch};
    fit.amplitude = p[0];
    fit.offset = p[4];
    fit.width_sigma = p[3] * image.pitch;
    fit.ci95_center = ci_px * image.pitch;
    fit.iterations = iter;
    return fit;
}

} // namespace prismlattice
