// PLY vertex reader/writer. Only the vertex element is kept; any other element
// is parsed and discarded so files with faces or custom elements still load.

#include "boxfuse/error.hpp"
#include "boxfuse/scene_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace boxfuse {

namespace {

static_assert(std::endian::native == std::endian::little, "binary PLY path assumes a little-endian host");

enum class ScalarType { Int8, UInt8, Int16, UInt16, Int32, UInt32, Float32, Float64 };

std::optional<ScalarType> parse_scalar_type(const std::string& s) {
    if (s == "char" || s == "int8") return ScalarType::Int8;
    if (s == "uchar" || s == "uint8") return ScalarType::UInt8;
    if (s == "short" || s == "int16") return ScalarType::Int16;
    if (s == "ushort" || s == "uint16") return ScalarType::UInt16;
    if (s == "int" || s == "int32") return ScalarType::Int32;
    if (s == "uint" || s == "uint32") return ScalarType::UInt32;
    if (s == "float" || s == "float32") return ScalarType::Float32;
    if (s == "double" || s == "float64") return ScalarType::Float64;
    return std::nullopt;
}

std::size_t scalar_size(ScalarType t) {
    switch (t) {
        case ScalarType::Int8:
        case ScalarType::UInt8: return 1;
        case ScalarType::Int16:
        case ScalarType::UInt16: return 2;
        case ScalarType::Int32:
        case ScalarType::UInt32:
        case ScalarType::Float32: return 4;
        case ScalarType::Float64: return 8;
    }
    return 0;
}

struct Property {
    std::string name;
    ScalarType type = ScalarType::Float64;
    bool is_list = false;
    ScalarType count_type = ScalarType::UInt8;
};

struct Element {
    std::string name;
    std::size_t count = 0;
    std::vector<Property> properties;
};

struct Header {
    bool binary = false;
    std::vector<Element> elements;
};

[[noreturn]] void malformed(const fs::path& path, const std::string& what) {
    throw Error(ErrorKind::MalformedFile, path.string() + ": " + what);
}

Header parse_header(std::istream& in, const fs::path& path) {
    std::string line;
    if (!std::getline(in, line) || line.substr(0, 3) != "ply") malformed(path, "missing 'ply' magic");
    Header header;
    bool have_format = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream ls(line);
        std::string keyword;
        ls >> keyword;
        if (keyword.empty() || keyword == "comment" || keyword == "obj_info") continue;
        if (keyword == "end_header") {
            if (!have_format) malformed(path, "missing format line");
            return header;
        }
        if (keyword == "format") {
            std::string fmt;
            ls >> fmt;
            if (fmt == "ascii") {
                header.binary = false;
            } else if (fmt == "binary_little_endian") {
                header.binary = true;
            } else {
                malformed(path, "unsupported format '" + fmt + "'");
            }
            have_format = true;
        } else if (keyword == "element") {
            Element e;
            long long count = -1;
            ls >> e.name >> count;
            if (!ls || count < 0) malformed(path, "bad element line '" + line + "'");
            e.count = static_cast<std::size_t>(count);
            header.elements.push_back(std::move(e));
        } else if (keyword == "property") {
            if (header.elements.empty()) malformed(path, "property before element");
            Property p;
            std::string type;
            ls >> type;
            if (type == "list") {
                std::string count_type, item_type;
                ls >> count_type >> item_type >> p.name;
                auto ct = parse_scalar_type(count_type);
                auto it = parse_scalar_type(item_type);
                if (!ct || !it || p.name.empty()) malformed(path, "bad list property '" + line + "'");
                p.is_list = true;
                p.count_type = *ct;
                p.type = *it;
            } else {
                ls >> p.name;
                auto t = parse_scalar_type(type);
                if (!t || p.name.empty()) malformed(path, "bad property '" + line + "'");
                p.type = *t;
            }
            header.elements.back().properties.push_back(std::move(p));
        } else {
            malformed(path, "unknown header keyword '" + keyword + "'");
        }
    }
    malformed(path, "missing end_header");
}

double read_binary_scalar(std::istream& in, ScalarType t, const fs::path& path) {
    unsigned char buf[8];
    const std::size_t n = scalar_size(t);
    if (!in.read(reinterpret_cast<char*>(buf), static_cast<std::streamsize>(n))) malformed(path, "truncated data");
    switch (t) {
        case ScalarType::Int8: { std::int8_t v; std::memcpy(&v, buf, 1); return v; }
        case ScalarType::UInt8: { std::uint8_t v; std::memcpy(&v, buf, 1); return v; }
        case ScalarType::Int16: { std::int16_t v; std::memcpy(&v, buf, 2); return v; }
        case ScalarType::UInt16: { std::uint16_t v; std::memcpy(&v, buf, 2); return v; }
        case ScalarType::Int32: { std::int32_t v; std::memcpy(&v, buf, 4); return v; }
        case ScalarType::UInt32: { std::uint32_t v; std::memcpy(&v, buf, 4); return v; }
        case ScalarType::Float32: { float v; std::memcpy(&v, buf, 4); return v; }
        case ScalarType::Float64: { double v; std::memcpy(&v, buf, 8); return v; }
    }
    return 0;
}

double read_ascii_scalar(std::istream& in, const fs::path& path) {
    std::string token;
    if (!(in >> token)) malformed(path, "truncated data");
    try {
        std::size_t used = 0;
        const double v = std::stod(token, &used);
        if (used != token.size()) malformed(path, "bad number '" + token + "'");
        return v;
    } catch (const std::logic_error&) {
        // stod rejects "nan"/"inf" spellings on some platforms; treat them as non-finite.
        if (token == "nan" || token == "-nan" || token == "inf" || token == "-inf") return NAN;
        malformed(path, "bad number '" + token + "'");
    }
}

}  // namespace

ScenePointCloud load_point_cloud(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) malformed(path, "cannot open file");
    const Header header = parse_header(in, path);

    ScenePointCloud cloud;
    bool found_vertex = false;
    for (const Element& element : header.elements) {
        const bool is_vertex = element.name == "vertex";
        int ix = -1, iy = -1, iz = -1, inx = -1, iny = -1, inz = -1;
        if (is_vertex) {
            found_vertex = true;
            for (std::size_t k = 0; k < element.properties.size(); ++k) {
                const auto& p = element.properties[k];
                if (p.is_list) continue;
                const int idx = static_cast<int>(k);
                if (p.name == "x") ix = idx;
                else if (p.name == "y") iy = idx;
                else if (p.name == "z") iz = idx;
                else if (p.name == "nx") inx = idx;
                else if (p.name == "ny") iny = idx;
                else if (p.name == "nz") inz = idx;
            }
            if (ix < 0 || iy < 0 || iz < 0) malformed(path, "vertex element lacks x/y/z");
            if (element.count == 0) throw Error(ErrorKind::EmptyCloud, path.string() + ": no vertices");
            cloud.points.resize(element.count);
            if (inx >= 0 && iny >= 0 && inz >= 0) cloud.normals.emplace(element.count);
        }
        std::vector<double> values(element.properties.size());
        for (std::size_t row = 0; row < element.count; ++row) {
            for (std::size_t k = 0; k < element.properties.size(); ++k) {
                const auto& p = element.properties[k];
                if (p.is_list) {
                    const double n = header.binary ? read_binary_scalar(in, p.count_type, path)
                                                   : read_ascii_scalar(in, path);
                    if (n < 0 || n != std::floor(n)) malformed(path, "bad list length");
                    for (long long j = 0; j < static_cast<long long>(n); ++j) {
                        if (header.binary) read_binary_scalar(in, p.type, path);
                        else read_ascii_scalar(in, path);
                    }
                    values[k] = 0;
                } else {
                    values[k] = header.binary ? read_binary_scalar(in, p.type, path) : read_ascii_scalar(in, path);
                }
            }
            if (is_vertex) {
                cloud.points[row] = Vec3(values[ix], values[iy], values[iz]);
                if (cloud.normals) (*cloud.normals)[row] = Vec3(values[inx], values[iny], values[inz]);
            }
        }
        if (is_vertex) break;
    }
    if (!found_vertex) malformed(path, "no vertex element");
    for (std::size_t i = 0; i < cloud.points.size(); ++i) {
        if (!cloud.points[i].allFinite())
            throw Error(ErrorKind::NonFiniteCoordinate, path.string() + ": vertex " + std::to_string(i));
    }
    validate(cloud);
    return cloud;
}

void write_point_cloud(const ScenePointCloud& cloud, const fs::path& path, PlyFormat format) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::IoFailure, "cannot write " + path.string());
    const bool binary = format == PlyFormat::BinaryLittleEndian;
    out << "ply\n" << (binary ? "format binary_little_endian 1.0\n" : "format ascii 1.0\n");
    out << "element vertex " << cloud.size() << "\n";
    out << "property double x\nproperty double y\nproperty double z\n";
    if (cloud.normals) out << "property double nx\nproperty double ny\nproperty double nz\n";
    out << "end_header\n";
    if (binary) {
        for (std::size_t i = 0; i < cloud.size(); ++i) {
            out.write(reinterpret_cast<const char*>(cloud.points[i].data()), 3 * sizeof(double));
            if (cloud.normals)
                out.write(reinterpret_cast<const char*>((*cloud.normals)[i].data()), 3 * sizeof(double));
        }
    } else {
        out.precision(17);
        for (std::size_t i = 0; i < cloud.size(); ++i) {
            const Vec3& p = cloud.points[i];
            out << p.x() << ' ' << p.y() << ' ' << p.z();
            if (cloud.normals) {
                const Vec3& n = (*cloud.normals)[i];
                out << ' ' << n.x() << ' ' << n.y() << ' ' << n.z();
            }
            out << '\n';
        }
    }
    if (!out) throw Error(ErrorKind::IoFailure, "write failed for " + path.string());
}

}  // namespace boxfuse
