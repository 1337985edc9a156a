#include "noma/channel.hpp"

#include <cmath>

#include "noma/errors.hpp"

namespace noma {

QuantizerMode parse_quantizer_mode(const std::string& name)
{
    if (name == "rvq")
        return QuantizerMode::rvq;
    if (name == "codebook")
        return QuantizerMode::codebook;
    if (name == "cell")
        return QuantizerMode::cell;
    if (name == "constant")
        return QuantizerMode::constant;
    if (name == "perfect")
        return QuantizerMode::perfect;
    throw ConfigError("unknown quantizer mode '" + name
                      + "' (expected rvq, codebook, cell, constant, perfect)");
}

std::string to_string(QuantizerMode mode)
{
    switch (mode)
    {
        case QuantizerMode::rvq:
            return "rvq";
        case QuantizerMode::codebook:
            return "codebook";
        case QuantizerMode::cell:
            return "cell";
        case QuantizerMode::constant:
            return "constant";
        case QuantizerMode::perfect:
            return "perfect";
    }
    return "unknown";
}

CVector draw_complex_normal(RandomStream& rng, int size)
{
    CVector v(size);
    for (int i = 0; i < size; ++i)
        v[i] = rng.complex_normal();
    return v;
}

std::vector<CVector> draw_channels(RandomStream& rng, int antennas,
                                   int clusters, int users_per_cluster)
{
    std::vector<CVector> h;
    h.reserve(clusters * users_per_cluster);
    for (int i = 0; i < clusters * users_per_cluster; ++i)
        h.push_back(draw_complex_normal(rng, antennas));
    return h;
}

CVector draw_isotropic_unit(RandomStream& rng, int size)
{
    CVector v = draw_complex_normal(rng, size);
    return v / v.norm();
}

namespace {

//! Unit vector orthogonal to the unit vector x, isotropic in that subspace.
CVector draw_orthogonal_unit(const CVector& x, RandomStream& rng)
{
    CVector g = draw_complex_normal(rng, static_cast<int>(x.size()));
    g -= x * x.dot(g);
    // Second pass restores orthogonality lost to rounding.
    g -= x * x.dot(g);
    return g / g.norm();
}

/*!
 * Place h_hat at a prescribed angle from the CDI along direction u.
 * One uniform was already drawn by the caller; u carries M normals.
 */
QuantizedCdi place_at_angle(const CVector& cdi, double sin2, const CVector& u)
{
    QuantizedCdi q;
    q.sin2 = sin2;
    q.cos2 = 1 - sin2;
    double s = std::sqrt(sin2);
    double c = std::sqrt(q.cos2);
    q.h_hat = c * cdi + s * u;
    q.e_tilde = s * cdi - c * u;
    return q;
}

}  // namespace

QuantizedCdi decompose_cdi(const CVector& h, const CVector& h_hat,
                           RandomStream& rng)
{
    CVector cdi = h / h.norm();
    CVector hh = h_hat / h_hat.norm();
    std::complex<double> ip = hh.dot(cdi);
    if (std::abs(ip) > 0)
        hh *= ip / std::abs(ip);
    double cosine = std::abs(ip);
    CVector residual = cdi - cosine * hh;
    double sine = residual.norm();
    QuantizedCdi q;
    q.h_hat = hh;
    q.sin2 = sine * sine;
    q.cos2 = 1 - q.sin2;
    if (sine > 0)
        q.e_tilde = residual / sine;
    else
        q.e_tilde = draw_orthogonal_unit(hh, rng);
    return q;
}

QuantizedCdi rvq_quantize(const CVector& h, int bits, RandomStream& rng,
                          QuantizerMode mode)
{
    if (bits < 0)
        throw DomainError("rvq_quantize: bits must be >= 0");
    const int M = static_cast<int>(h.size());
    const CVector cdi = h / h.norm();

    if (mode == QuantizerMode::codebook)
    {
        if (bits > 30)
            throw DomainError("rvq_quantize: codebook mode supports at most 30 bits");
        const long count = 1L << bits;
        CVector best;
        double best_ip = -1;
        for (long c = 0; c < count; ++c)
        {
            CVector word = draw_isotropic_unit(rng, M);
            double ip = std::norm(word.dot(cdi));
            if (ip > best_ip)
            {
                best_ip = ip;
                best = std::move(word);
            }
        }
        return decompose_cdi(h, best, rng);
    }

    // All samplers consume one uniform and one orthogonal direction so the
    // stream stays aligned across modes and bit levels.
    double uniform = rng.uniform_open();
    CVector u = draw_orthogonal_unit(cdi, rng);
    double sin2 = 0;
    switch (mode)
    {
        case QuantizerMode::rvq:
        {
            // P(sin^2 > x) = (1 - x^{M-1})^{2^B}
            double t = -std::expm1(std::ldexp(std::log(uniform), -bits));
            sin2 = std::pow(t, 1.0 / (M - 1));
            break;
        }
        case QuantizerMode::cell:
        {
            double delta = std::exp2(-static_cast<double>(bits) / (M - 1));
            sin2 = delta * std::pow(uniform, 1.0 / (M - 1));
            break;
        }
        case QuantizerMode::constant:
            sin2 = std::exp2(-static_cast<double>(bits) / (M - 1));
            break;
        case QuantizerMode::perfect:
            sin2 = 0;
            break;
        case QuantizerMode::codebook:
            break;
    }
    return place_at_angle(cdi, sin2, u);
}

std::vector<CVector> zf_beamformers(const std::vector<CVector>& h_hat,
                                    int antennas, int clusters,
                                    int users_per_cluster, RandomStream& rng)
{
    std::vector<CVector> w(clusters);
    if (clusters == 1)
    {
        w[0] = draw_isotropic_unit(rng, antennas);
        return w;
    }
    const int rows = (clusters - 1) * users_per_cluster;
    if (antennas <= rows)
        throw NumericalDegeneracy("zf_beamformers: need M > (N-1)K");
    Eigen::MatrixXcd hbar(rows, antennas);
    for (int n = 0; n < clusters; ++n)
    {
        int r = 0;
        for (int k = 0; k < users_per_cluster; ++k)
            for (int m = 0; m < clusters; ++m)
                if (m != n)
                    hbar.row(r++) = h_hat[m + clusters * k].transpose();

        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(hbar, Eigen::ComputeFullV);
        const auto& sv = svd.singularValues();
        double tol = 1e-10 * sv(0);
        int rank = 0;
        for (Eigen::Index i = 0; i < sv.size(); ++i)
            rank += sv(i) > tol ? 1 : 0;
        if (rank < rows)
            throw NumericalDegeneracy(
                "zf_beamformers: complementary matrix is rank deficient");
        Eigen::MatrixXcd null_basis = svd.matrixV().rightCols(antennas - rank);
        CVector p = draw_isotropic_unit(rng, antennas - rank);
        w[n] = null_basis * p;
    }
    return w;
}

ChannelRealization draw_realization(RandomStream& rng, int antennas,
                                    const Eigen::MatrixXi& bits,
                                    QuantizerMode mode)
{
    ChannelRealization r;
    r.antennas = antennas;
    r.clusters = static_cast<int>(bits.rows());
    r.users_per_cluster = static_cast<int>(bits.cols());
    const int users = r.clusters * r.users_per_cluster;
    r.h = draw_channels(rng, antennas, r.clusters, r.users_per_cluster);
    r.h_hat.resize(users);
    r.e_tilde.resize(users);
    r.cos2.resize(users);
    r.sin2.resize(users);
    for (int k = 0; k < r.users_per_cluster; ++k)
    {
        for (int n = 0; n < r.clusters; ++n)
        {
            int i = r.index(n, k);
            QuantizedCdi q = rvq_quantize(r.h[i], bits(n, k), rng, mode);
            r.h_hat[i] = std::move(q.h_hat);
            r.e_tilde[i] = std::move(q.e_tilde);
            r.cos2[i] = q.cos2;
            r.sin2[i] = q.sin2;
        }
    }
    r.w = zf_beamformers(r.h_hat, antennas, r.clusters, r.users_per_cluster, rng);
    return r;
}

}  // namespace noma
