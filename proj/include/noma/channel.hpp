#pragma once

#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "noma/rng.hpp"

namespace noma {

using CVector = Eigen::VectorXcd;

//! How the quantized CDI is produced for each user.
enum class QuantizerMode
{
    rvq,       //!< exact RVQ angle law, h_hat isotropic at that angle
    codebook,  //!< explicit random codebook search (bits <= 30)
    cell,      //!< quantization-cell model: sin^2 = delta * Beta(M-1, 1)
    constant,  //!< sin^2 fixed at 2^{-B/(M-1)} (alternative CSI model)
    perfect,   //!< h_hat = CDI, sin = 0
};

QuantizerMode parse_quantizer_mode(const std::string& name);
std::string to_string(QuantizerMode mode);

struct QuantizedCdi
{
    CVector h_hat;
    double cos2{1};
    double sin2{0};
    CVector e_tilde;
};

/*!
 * One fading draw. Users are indexed flat as i = n + N k.
 *
 * Channels are row vectors in the model; products h w are bilinear
 * (h.transpose() * w) and the decomposition
 *     h / |h| = cos(theta) h_hat + sin(theta) e_tilde
 * holds exactly with e_tilde orthogonal (Hermitian) to h_hat.
 */
struct ChannelRealization
{
    int antennas{0};
    int clusters{0};
    int users_per_cluster{0};
    std::vector<CVector> h;
    std::vector<CVector> h_hat;
    std::vector<CVector> e_tilde;
    std::vector<double> cos2;
    std::vector<double> sin2;
    std::vector<CVector> w;

    int index(int n, int k) const { return n + clusters * k; }
};

//! Vector of i.i.d. CN(0,1) entries.
CVector draw_complex_normal(RandomStream& rng, int size);

//! N K independent CN(0, I_M) channels in flat user order.
std::vector<CVector> draw_channels(RandomStream& rng, int antennas,
                                   int clusters, int users_per_cluster);

//! Uniform unit vector in C^M.
CVector draw_isotropic_unit(RandomStream& rng, int size);

/*!
 * Quantize the direction of h with a B-bit random codebook (or one of the
 * statistically equivalent samplers).
 */
QuantizedCdi rvq_quantize(const CVector& h, int bits, RandomStream& rng,
                          QuantizerMode mode = QuantizerMode::rvq);

//! Decompose the CDI of h given its quantization h_hat (any phase).
QuantizedCdi decompose_cdi(const CVector& h, const CVector& h_hat,
                           RandomStream& rng);

/*!
 * Zero-forcing beamformers: w_n spans a random direction in the null space
 * of all other clusters' quantized CDIs (bilinear rows h_hat^T).
 */
std::vector<CVector> zf_beamformers(const std::vector<CVector>& h_hat,
                                    int antennas, int clusters,
                                    int users_per_cluster, RandomStream& rng);

/*!
 * Full realization: channels, quantization per user bits (N x K), and
 * beamformers.
 */
ChannelRealization draw_realization(RandomStream& rng, int antennas,
                                    const Eigen::MatrixXi& bits,
                                    QuantizerMode mode);

}  // namespace noma
