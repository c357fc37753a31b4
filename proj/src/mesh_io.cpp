#include "dentkit/mesh_io.hpp"

#include "dentkit/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace dentkit {

namespace {

using json = nlohmann::json;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IOError("cannot open " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

// --- PLY ---------------------------------------------------------------

enum class PlyType { Int8, UInt8, Int16, UInt16, Int32, UInt32, Float32, Float64 };

size_t ply_type_size(PlyType t) {
    switch (t) {
        case PlyType::Int8:
        case PlyType::UInt8: return 1;
        case PlyType::Int16:
        case PlyType::UInt16: return 2;
        case PlyType::Int32:
        case PlyType::UInt32:
        case PlyType::Float32: return 4;
        case PlyType::Float64: return 8;
    }
    return 0;
}

PlyType parse_ply_type(const std::string& name) {
    if (name == "char" || name == "int8") return PlyType::Int8;
    if (name == "uchar" || name == "uint8") return PlyType::UInt8;
    if (name == "short" || name == "int16") return PlyType::Int16;
    if (name == "ushort" || name == "uint16") return PlyType::UInt16;
    if (name == "int" || name == "int32") return PlyType::Int32;
    if (name == "uint" || name == "uint32") return PlyType::UInt32;
    if (name == "float" || name == "float32") return PlyType::Float32;
    if (name == "double" || name == "float64") return PlyType::Float64;
    throw ParseError("unknown ply property type '" + name + "'");
}

struct PlyProperty {
    std::string name;
    PlyType type = PlyType::Float32;
    bool is_list = false;
    PlyType count_type = PlyType::UInt8;
};

struct PlyElement {
    std::string name;
    size_t count = 0;
    std::vector<PlyProperty> properties;
};

struct PlyHeader {
    bool binary = false;
    std::vector<PlyElement> elements;
    size_t body_offset = 0;
};

PlyHeader parse_ply_header(const std::string& data) {
    PlyHeader header;
    size_t pos = 0;
    auto next_line = [&]() -> std::string {
        size_t end = data.find('\n', pos);
        if (end == std::string::npos) throw ParseError("unterminated ply header");
        std::string line = data.substr(pos, end - pos);
        pos = end + 1;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
    };

    if (next_line() != "ply") throw ParseError("missing ply magic");
    bool format_seen = false;
    bool ended = false;
    while (pos < data.size()) {
        const std::string line = next_line();
        std::istringstream tokens(line);
        std::string keyword;
        tokens >> keyword;
        if (keyword == "comment" || keyword == "obj_info" || keyword.empty()) continue;
        if (keyword == "format") {
            std::string fmt, version;
            tokens >> fmt >> version;
            if (fmt == "ascii") {
                header.binary = false;
            } else if (fmt == "binary_little_endian") {
                header.binary = true;
            } else {
                throw ParseError("unsupported ply format '" + fmt + "'");
            }
            format_seen = true;
        } else if (keyword == "element") {
            PlyElement element;
            tokens >> element.name >> element.count;
            if (tokens.fail()) throw ParseError("malformed element line: " + line);
            header.elements.push_back(element);
        } else if (keyword == "property") {
            if (header.elements.empty()) throw ParseError("property before element");
            std::string type_name;
            tokens >> type_name;
            PlyProperty prop;
            if (type_name == "list") {
                std::string count_name, value_name;
                tokens >> count_name >> value_name >> prop.name;
                prop.is_list = true;
                prop.count_type = parse_ply_type(count_name);
                prop.type = parse_ply_type(value_name);
            } else {
                prop.type = parse_ply_type(type_name);
                tokens >> prop.name;
            }
            if (tokens.fail()) throw ParseError("malformed property line: " + line);
            header.elements.back().properties.push_back(prop);
        } else if (keyword == "end_header") {
            ended = true;
            break;
        } else {
            throw ParseError("unexpected header keyword '" + keyword + "'");
        }
    }
    if (!ended) throw ParseError("missing end_header");
    if (!format_seen) throw ParseError("missing format line");
    header.body_offset = pos;
    return header;
}

class BinaryCursor {
public:
    BinaryCursor(const std::string& data, size_t offset) : data_(data), pos_(offset) {}

    double read(PlyType type) {
        const size_t size = ply_type_size(type);
        if (pos_ + size > data_.size()) throw ParseError("unexpected end of binary ply body");
        const char* p = data_.data() + pos_;
        pos_ += size;
        switch (type) {
            case PlyType::Int8: return static_cast<double>(static_cast<int8_t>(*p));
            case PlyType::UInt8: return static_cast<double>(static_cast<uint8_t>(*p));
            case PlyType::Int16: { int16_t v; std::memcpy(&v, p, 2); return v; }
            case PlyType::UInt16: { uint16_t v; std::memcpy(&v, p, 2); return v; }
            case PlyType::Int32: { int32_t v; std::memcpy(&v, p, 4); return v; }
            case PlyType::UInt32: { uint32_t v; std::memcpy(&v, p, 4); return v; }
            case PlyType::Float32: { float v; std::memcpy(&v, p, 4); return v; }
            case PlyType::Float64: { double v; std::memcpy(&v, p, 8); return v; }
        }
        return 0.0;
    }

private:
    const std::string& data_;
    size_t pos_;
};

class AsciiCursor {
public:
    AsciiCursor(const std::string& data, size_t offset) : stream_(data.substr(offset)) {}

    double read(PlyType) {
        double value;
        if (!(stream_ >> value)) throw ParseError("unexpected end of ascii ply body");
        return value;
    }

private:
    std::istringstream stream_;
};

bool is_integer_type(PlyType t) {
    return t != PlyType::Float32 && t != PlyType::Float64;
}

template <typename Cursor>
TriangleMesh read_ply_body(const PlyHeader& header, Cursor& cursor) {
    TriangleMesh mesh;
    for (const PlyElement& element : header.elements) {
        if (element.name == "vertex") {
            int ix = -1, iy = -1, iz = -1, inx = -1, iny = -1, inz = -1, ilabel = -1;
            for (size_t p = 0; p < element.properties.size(); ++p) {
                const PlyProperty& prop = element.properties[p];
                if (prop.is_list) throw ParseError("list property on vertex element");
                if (prop.name == "x") ix = static_cast<int>(p);
                else if (prop.name == "y") iy = static_cast<int>(p);
                else if (prop.name == "z") iz = static_cast<int>(p);
                else if (prop.name == "nx") inx = static_cast<int>(p);
                else if (prop.name == "ny") iny = static_cast<int>(p);
                else if (prop.name == "nz") inz = static_cast<int>(p);
                else if (prop.name == "label") {
                    if (!is_integer_type(prop.type)) {
                        throw ParseError("label property must be an integer type");
                    }
                    ilabel = static_cast<int>(p);
                }
            }
            if (ix < 0 || iy < 0 || iz < 0) throw ParseError("vertex element missing x/y/z");
            const bool has_normals = inx >= 0 && iny >= 0 && inz >= 0;

            mesh.vertices.reserve(element.count);
            std::vector<double> row(element.properties.size());
            for (size_t v = 0; v < element.count; ++v) {
                for (size_t p = 0; p < element.properties.size(); ++p) {
                    row[p] = cursor.read(element.properties[p].type);
                }
                mesh.vertices.emplace_back(row[ix], row[iy], row[iz]);
                if (has_normals) mesh.vertex_normals.emplace_back(row[inx], row[iny], row[inz]);
                if (ilabel >= 0) mesh.vertex_labels.push_back(static_cast<int>(row[ilabel]));
            }
        } else if (element.name == "face") {
            int list_index = -1;
            for (size_t p = 0; p < element.properties.size(); ++p) {
                const PlyProperty& prop = element.properties[p];
                if (prop.is_list &&
                    (prop.name == "vertex_indices" || prop.name == "vertex_index")) {
                    list_index = static_cast<int>(p);
                } else if (prop.is_list) {
                    throw ParseError("unsupported face list property '" + prop.name + "'");
                }
            }
            if (list_index < 0) throw ParseError("face element missing vertex_indices");

            mesh.triangles.reserve(element.count);
            for (size_t f = 0; f < element.count; ++f) {
                for (size_t p = 0; p < element.properties.size(); ++p) {
                    const PlyProperty& prop = element.properties[p];
                    if (static_cast<int>(p) == list_index) {
                        const int n = static_cast<int>(cursor.read(prop.count_type));
                        if (n < 3) throw ParseError("face with fewer than 3 indices");
                        std::vector<int> indices(n);
                        for (int i = 0; i < n; ++i) {
                            indices[i] = static_cast<int>(cursor.read(prop.type));
                        }
                        for (int i = 1; i + 1 < n; ++i) {
                            mesh.triangles.push_back({indices[0], indices[i], indices[i + 1]});
                        }
                    } else {
                        cursor.read(prop.type);
                    }
                }
            }
        } else {
            // Unknown element: consume and discard.
            for (size_t e = 0; e < element.count; ++e) {
                for (const PlyProperty& prop : element.properties) {
                    if (prop.is_list) {
                        const int n = static_cast<int>(cursor.read(prop.count_type));
                        for (int i = 0; i < n; ++i) cursor.read(prop.type);
                    } else {
                        cursor.read(prop.type);
                    }
                }
            }
        }
    }
    return mesh;
}

TriangleMesh load_ply(const std::string& path) {
    const std::string data = read_file(path);
    const PlyHeader header = parse_ply_header(data);
    if (header.binary) {
        BinaryCursor cursor(data, header.body_offset);
        return read_ply_body(header, cursor);
    }
    AsciiCursor cursor(data, header.body_offset);
    return read_ply_body(header, cursor);
}

void append_le(std::string& out, const void* p, size_t n) {
    out.append(reinterpret_cast<const char*>(p), n);
}

std::string format_double(double v) {
    char buf[32];
    const int n = snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf, n);
}

void write_ply(const TriangleMesh& mesh,
               const std::vector<std::array<unsigned char, 3>>* colors,
               const std::string& path, PlyEncoding encoding) {
    const bool binary = encoding == PlyEncoding::BinaryLittleEndian;
    std::ostringstream header;
    header << "ply\n";
    header << "format " << (binary ? "binary_little_endian" : "ascii") << " 1.0\n";
    header << "element vertex " << mesh.vertex_count() << "\n";
    header << "property double x\nproperty double y\nproperty double z\n";
    if (mesh.has_normals()) {
        header << "property double nx\nproperty double ny\nproperty double nz\n";
    }
    if (colors) {
        header << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
    }
    if (mesh.has_labels()) {
        header << "property int label\n";
    }
    header << "element face " << mesh.triangle_count() << "\n";
    header << "property list uchar int vertex_indices\n";
    header << "end_header\n";

    std::string body;
    if (binary) {
        for (int v = 0; v < mesh.vertex_count(); ++v) {
            const Vec3& p = mesh.vertices[v];
            append_le(body, p.data(), 24);
            if (mesh.has_normals()) append_le(body, mesh.vertex_normals[v].data(), 24);
            if (colors) append_le(body, (*colors)[v].data(), 3);
            if (mesh.has_labels()) {
                const int32_t label = mesh.vertex_labels[v];
                append_le(body, &label, 4);
            }
        }
        for (const Triangle& tri : mesh.triangles) {
            const uint8_t n = 3;
            append_le(body, &n, 1);
            const int32_t idx[3] = {tri[0], tri[1], tri[2]};
            append_le(body, idx, 12);
        }
    } else {
        std::ostringstream text;
        for (int v = 0; v < mesh.vertex_count(); ++v) {
            const Vec3& p = mesh.vertices[v];
            text << format_double(p.x()) << ' ' << format_double(p.y()) << ' '
                 << format_double(p.z());
            if (mesh.has_normals()) {
                const Vec3& n = mesh.vertex_normals[v];
                text << ' ' << format_double(n.x()) << ' ' << format_double(n.y()) << ' '
                     << format_double(n.z());
            }
            if (colors) {
                const auto& c = (*colors)[v];
                text << ' ' << int(c[0]) << ' ' << int(c[1]) << ' ' << int(c[2]);
            }
            if (mesh.has_labels()) text << ' ' << mesh.vertex_labels[v];
            text << '\n';
        }
        for (const Triangle& tri : mesh.triangles) {
            text << "3 " << tri[0] << ' ' << tri[1] << ' ' << tri[2] << '\n';
        }
        body = text.str();
    }

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IOError("cannot write " + path);
    out << header.str() << body;
    if (!out) throw IOError("write failed for " + path);
}

// --- OBJ ---------------------------------------------------------------

int resolve_obj_index(long value, size_t count, const char* what) {
    if (value == 0) throw ParseError(std::string("obj ") + what + " index 0 (indices are 1-based)");
    long resolved = value > 0 ? value - 1 : static_cast<long>(count) + value;
    if (resolved < 0 || resolved >= static_cast<long>(count)) {
        throw ParseError(std::string("obj ") + what + " index out of range");
    }
    return static_cast<int>(resolved);
}

TriangleMesh load_obj(const std::string& path) {
    const std::string data = read_file(path);
    TriangleMesh mesh;
    std::vector<Vec3> normals;
    // vertex index -> normal index assignment seen on faces
    std::vector<int> vertex_normal_index;

    std::istringstream lines(data);
    std::string line;
    while (std::getline(lines, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream tokens(line);
        std::string keyword;
        if (!(tokens >> keyword)) continue;
        if (keyword == "v") {
            double x, y, z;
            if (!(tokens >> x >> y >> z)) throw ParseError("malformed obj vertex: " + line);
            mesh.vertices.emplace_back(x, y, z);
        } else if (keyword == "vn") {
            double x, y, z;
            if (!(tokens >> x >> y >> z)) throw ParseError("malformed obj normal: " + line);
            normals.emplace_back(x, y, z);
        } else if (keyword == "f") {
            std::vector<int> face;
            std::vector<int> face_normals;
            std::string part;
            while (tokens >> part) {
                // forms: v, v/vt, v//vn, v/vt/vn
                long vi = 0, ni = 0;
                bool has_normal = false;
                const size_t s1 = part.find('/');
                if (s1 == std::string::npos) {
                    vi = std::stol(part);
                } else {
                    vi = std::stol(part.substr(0, s1));
                    const size_t s2 = part.find('/', s1 + 1);
                    if (s2 != std::string::npos && s2 + 1 < part.size()) {
                        ni = std::stol(part.substr(s2 + 1));
                        has_normal = true;
                    }
                }
                face.push_back(resolve_obj_index(vi, mesh.vertices.size(), "vertex"));
                face_normals.push_back(
                    has_normal ? resolve_obj_index(ni, normals.size(), "normal") : -1);
            }
            if (face.size() < 3) throw ParseError("obj face with fewer than 3 vertices");
            for (size_t i = 1; i + 1 < face.size(); ++i) {
                mesh.triangles.push_back({face[0], face[static_cast<int>(i)],
                                          face[static_cast<int>(i) + 1]});
            }
            if (vertex_normal_index.size() < mesh.vertices.size()) {
                vertex_normal_index.resize(mesh.vertices.size(), -1);
            }
            for (size_t i = 0; i < face.size(); ++i) {
                if (face_normals[i] >= 0) vertex_normal_index[face[i]] = face_normals[i];
            }
        }
        // everything else (vt, usemtl, o, g, s, #, mtllib) is ignored
    }

    // Attach normals only when every vertex has one assigned.
    if (!normals.empty() && vertex_normal_index.size() == mesh.vertices.size() &&
        std::all_of(vertex_normal_index.begin(), vertex_normal_index.end(),
                    [](int i) { return i >= 0; })) {
        mesh.vertex_normals.resize(mesh.vertices.size());
        for (size_t v = 0; v < mesh.vertices.size(); ++v) {
            mesh.vertex_normals[v] = normals[vertex_normal_index[v]];
        }
    }

    // Labels sidecar.
    const std::string sidecar = labels_sidecar_path(path);
    if (std::filesystem::exists(sidecar)) {
        json doc;
        try {
            doc = json::parse(read_file(sidecar));
        } catch (const json::exception& e) {
            throw ParseError("labels sidecar " + sidecar + ": " + e.what());
        }
        if (!doc.contains("labels") || !doc["labels"].is_array()) {
            throw ParseError("labels sidecar missing \"labels\" array");
        }
        std::vector<int> labels = doc["labels"].get<std::vector<int>>();
        if (labels.size() != mesh.vertices.size()) {
            throw LabelMismatch("sidecar has " + std::to_string(labels.size()) +
                                " labels for " + std::to_string(mesh.vertices.size()) +
                                " vertices");
        }
        mesh.vertex_labels = std::move(labels);
    }
    return mesh;
}

void write_obj(const TriangleMesh& mesh, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IOError("cannot write " + path);
    for (const Vec3& p : mesh.vertices) {
        out << "v " << format_double(p.x()) << ' ' << format_double(p.y()) << ' '
            << format_double(p.z()) << '\n';
    }
    for (const Vec3& n : mesh.vertex_normals) {
        out << "vn " << format_double(n.x()) << ' ' << format_double(n.y()) << ' '
            << format_double(n.z()) << '\n';
    }
    const bool with_normals = mesh.has_normals();
    for (const Triangle& tri : mesh.triangles) {
        out << 'f';
        for (int idx : tri) {
            if (with_normals) {
                out << ' ' << idx + 1 << "//" << idx + 1;
            } else {
                out << ' ' << idx + 1;
            }
        }
        out << '\n';
    }
    if (!out) throw IOError("write failed for " + path);

    if (mesh.has_labels()) {
        json doc;
        doc["labels"] = mesh.vertex_labels;
        std::ofstream side(labels_sidecar_path(path), std::ios::binary);
        if (!side) throw IOError("cannot write labels sidecar for " + path);
        side << doc.dump() << '\n';
    }
}

int drop_degenerate_triangles(TriangleMesh& mesh) {
    int dropped = 0;
    std::vector<Triangle> kept;
    kept.reserve(mesh.triangles.size());
    for (const Triangle& tri : mesh.triangles) {
        if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2]) {
            ++dropped;
            continue;
        }
        const Vec3& a = mesh.vertices[tri[0]];
        const Vec3& b = mesh.vertices[tri[1]];
        const Vec3& c = mesh.vertices[tri[2]];
        if ((b - a).cross(c - a).norm() == 0.0) {
            ++dropped;
            continue;
        }
        kept.push_back(tri);
    }
    mesh.triangles = std::move(kept);
    return dropped;
}

}  // namespace

MeshFormat format_from_path(const std::string& path) {
    const std::string ext = std::filesystem::path(path).extension().string();
    std::string lower;
    for (char c : ext) lower.push_back(static_cast<char>(std::tolower(c)));
    if (lower == ".ply") return MeshFormat::Ply;
    if (lower == ".obj") return MeshFormat::Obj;
    throw ParseError("cannot infer mesh format from extension '" + ext + "'");
}

std::string labels_sidecar_path(const std::string& mesh_path) {
    std::filesystem::path p(mesh_path);
    p.replace_extension("");
    return p.string() + ".labels.json";
}

TriangleMesh load_mesh(const std::string& path, MeshFormat format, int* degenerate_dropped) {
    TriangleMesh mesh = format == MeshFormat::Ply ? load_ply(path) : load_obj(path);

    const int nv = mesh.vertex_count();
    for (const Triangle& tri : mesh.triangles) {
        for (int idx : tri) {
            if (idx < 0 || idx >= nv) throw ParseError("face index out of range in " + path);
        }
    }
    const int dropped = drop_degenerate_triangles(mesh);
    if (degenerate_dropped) *degenerate_dropped = dropped;
    if (mesh.has_labels() &&
        static_cast<int>(mesh.vertex_labels.size()) != mesh.vertex_count()) {
        throw LabelMismatch("label count does not match vertex count in " + path);
    }
    validate_mesh(mesh);
    return mesh;
}

void save_mesh(const TriangleMesh& mesh, const std::string& path, MeshFormat format,
               PlyEncoding encoding) {
    if (format == MeshFormat::Ply) {
        write_ply(mesh, nullptr, path, encoding);
    } else {
        write_obj(mesh, path);
    }
}

void save_ply_with_colors(const TriangleMesh& mesh,
                          const std::vector<std::array<unsigned char, 3>>& colors,
                          const std::string& path, PlyEncoding encoding) {
    if (colors.size() != mesh.vertices.size()) {
        throw LengthMismatch("color count does not match vertex count");
    }
    write_ply(mesh, &colors, path, encoding);
}

}  // namespace dentkit
