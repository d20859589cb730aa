#include "lcn/io.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <sstream>

#include "lcn/error.hpp"

namespace lcn {

namespace {

constexpr char kMagic[7] = {'L', 'C', 'N', 'P', 'T', 'S', '1'};

std::uint64_t read_u64_le(std::istream& in) {
    std::array<unsigned char, 8> buf{};
    in.read(reinterpret_cast<char*>(buf.data()), 8);
    std::uint64_t v = 0;
    for (int k = 7; k >= 0; --k) v = (v << 8) | buf[static_cast<std::size_t>(k)];
    return v;
}

void write_u64_le(std::ostream& out, std::uint64_t v) {
    std::array<unsigned char, 8> buf{};
    for (int k = 0; k < 8; ++k) buf[static_cast<std::size_t>(k)] = static_cast<unsigned char>(v >> (8 * k));
    out.write(reinterpret_cast<const char*>(buf.data()), 8);
}

}  // namespace

PointSet read_points_text(std::istream& in, const std::string& id) {
    std::string line;
    auto next_data_line = [&](std::string& out_line) -> bool {
        while (std::getline(in, out_line)) {
            std::size_t pos = out_line.find_first_not_of(" \t\r");
            if (pos == std::string::npos) continue;
            if (out_line[pos] == '#') continue;
            return true;
        }
        return false;
    };
    if (!next_data_line(line))
        throw InvalidArgument("point file is empty");
    std::istringstream header(line);
    std::size_t n = 0, d = 0;
    if (!(header >> n >> d) || n == 0 || d == 0)
        throw InvalidArgument("point file header must be `n d` with n, d >= 1");
    PointSet points(n, d, id);
    for (std::size_t i = 0; i < n; ++i) {
        if (!next_data_line(line))
            throw InvalidArgument("point file truncated at row " + std::to_string(i));
        std::istringstream row(line);
        for (std::size_t k = 0; k < d; ++k)
            if (!(row >> points.coords[i * d + k]))
                throw InvalidArgument("point file row " + std::to_string(i) + " has fewer than d values");
    }
    points.validate();
    return points;
}

void write_points_text(std::ostream& out, const PointSet& points) {
    out << points.n << ' ' << points.dim << '\n';
    out.precision(17);
    for (std::size_t i = 0; i < points.n; ++i) {
        const double* row = points.point(i);
        for (std::size_t k = 0; k < points.dim; ++k) {
            if (k) out << ' ';
            out << row[k];
        }
        out << '\n';
    }
}

PointSet read_points_binary(std::istream& in, const std::string& id) {
    char magic[7];
    in.read(magic, 7);
    if (!in || std::memcmp(magic, kMagic, 7) != 0)
        throw InvalidArgument("bad point file magic");
    std::uint64_t n = read_u64_le(in);
    std::uint64_t d = read_u64_le(in);
    if (!in || n == 0 || d == 0)
        throw InvalidArgument("bad point file header");
    PointSet points(n, d, id);
    in.read(reinterpret_cast<char*>(points.coords.data()),
            static_cast<std::streamsize>(points.coords.size() * sizeof(double)));
    if (!in)
        throw InvalidArgument("point file truncated");
    points.validate();
    return points;
}

void write_points_binary(std::ostream& out, const PointSet& points) {
    out.write(kMagic, 7);
    write_u64_le(out, points.n);
    write_u64_le(out, points.dim);
    out.write(reinterpret_cast<const char*>(points.coords.data()),
              static_cast<std::streamsize>(points.coords.size() * sizeof(double)));
}

PointSet read_points_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw InvalidArgument("cannot open point file '" + path + "'");
    char magic[7];
    in.read(magic, 7);
    bool binary = in && std::memcmp(magic, kMagic, 7) == 0;
    in.clear();
    in.seekg(0);
    return binary ? read_points_binary(in, path) : read_points_text(in, path);
}

void write_points_file(const std::string& path, const PointSet& points, bool binary) {
    std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
    if (!out)
        throw InvalidArgument("cannot open '" + path + "' for writing");
    if (binary)
        write_points_binary(out, points);
    else
        write_points_text(out, points);
}

}  // namespace lcn
