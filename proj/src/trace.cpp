#include "noma/trace.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace noma {
namespace {

constexpr char magic[8] = {'N', 'O', 'M', 'A', 'T', 'R', 'C', '1'};
constexpr std::uint32_t version = 1;

void put_u32(std::ostream& os, std::uint32_t v)
{
    char b[4];
    for (int i = 0; i < 4; ++i)
        b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    os.write(b, 4);
}

void put_u64(std::ostream& os, std::uint64_t v)
{
    put_u32(os, static_cast<std::uint32_t>(v));
    put_u32(os, static_cast<std::uint32_t>(v >> 32));
}

void put_f32(std::ostream& os, double v)
{
    float f = static_cast<float>(v);
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_u32(os, bits);
}

std::uint32_t get_u32(std::istream& is)
{
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4))
        throw std::runtime_error("trace: unexpected end of file");
    return std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8)
           | (std::uint32_t(b[2]) << 16) | (std::uint32_t(b[3]) << 24);
}

std::uint64_t get_u64(std::istream& is)
{
    std::uint64_t lo = get_u32(is);
    std::uint64_t hi = get_u32(is);
    return lo | (hi << 32);
}

double get_f32(std::istream& is)
{
    std::uint32_t bits = get_u32(is);
    float f;
    std::memcpy(&f, &bits, 4);
    return f;
}

void put_vectors(std::ostream& os, const std::vector<CVector>& vs)
{
    for (const auto& v : vs)
    {
        for (Eigen::Index j = 0; j < v.size(); ++j)
        {
            put_f32(os, v[j].real());
            put_f32(os, v[j].imag());
        }
    }
}

std::vector<CVector> get_vectors(std::istream& is, int count, int size)
{
    std::vector<CVector> vs(count, CVector(size));
    for (auto& v : vs)
    {
        for (int j = 0; j < size; ++j)
        {
            double re = get_f32(is);
            double im = get_f32(is);
            v[j] = {re, im};
        }
    }
    return vs;
}

}  // namespace

void write_trace(const std::string& path,
                 const std::vector<ChannelRealization>& realizations)
{
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw std::runtime_error("trace: cannot open '" + path + "' for writing");
    int M = 0, N = 0, K = 0;
    if (!realizations.empty())
    {
        M = realizations.front().antennas;
        N = realizations.front().clusters;
        K = realizations.front().users_per_cluster;
    }
    os.write(magic, 8);
    put_u32(os, version);
    put_u32(os, M);
    put_u32(os, N);
    put_u32(os, K);
    put_u64(os, realizations.size());
    for (const auto& r : realizations)
    {
        if (r.antennas != M || r.clusters != N || r.users_per_cluster != K)
            throw std::runtime_error("trace: realizations have mixed dimensions");
        put_vectors(os, r.h);
        put_vectors(os, r.h_hat);
        put_vectors(os, r.e_tilde);
        for (double c : r.cos2)
            put_f32(os, c);
        for (double s : r.sin2)
            put_f32(os, s);
        put_vectors(os, r.w);
    }
    if (!os)
        throw std::runtime_error("trace: write to '" + path + "' failed");
}

std::vector<ChannelRealization> read_trace(const std::string& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw std::runtime_error("trace: cannot open '" + path + "'");
    char head[8];
    if (!is.read(head, 8) || std::memcmp(head, magic, 8) != 0)
        throw std::runtime_error("trace: '" + path + "' is not a trace file");
    if (get_u32(is) != version)
        throw std::runtime_error("trace: unsupported version in '" + path + "'");
    int M = static_cast<int>(get_u32(is));
    int N = static_cast<int>(get_u32(is));
    int K = static_cast<int>(get_u32(is));
    std::uint64_t count = get_u64(is);
    std::vector<ChannelRealization> out;
    out.reserve(count);
    for (std::uint64_t c = 0; c < count; ++c)
    {
        ChannelRealization r;
        r.antennas = M;
        r.clusters = N;
        r.users_per_cluster = K;
        r.h = get_vectors(is, N * K, M);
        r.h_hat = get_vectors(is, N * K, M);
        r.e_tilde = get_vectors(is, N * K, M);
        for (int i = 0; i < N * K; ++i)
            r.cos2.push_back(get_f32(is));
        for (int i = 0; i < N * K; ++i)
            r.sin2.push_back(get_f32(is));
        r.w = get_vectors(is, N, M);
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace noma
