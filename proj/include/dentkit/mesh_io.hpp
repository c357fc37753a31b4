#pragma once

#include "dentkit/mesh.hpp"

#include <string>

namespace dentkit {

enum class MeshFormat { Ply, Obj };
enum class PlyEncoding { Ascii, BinaryLittleEndian };

// Picks the format from the file extension (.ply/.obj); throws ParseError
// for anything else.
MeshFormat format_from_path(const std::string& path);

// Loads a mesh. PLY labels come from an integer vertex property `label`;
// OBJ labels come from a `<stem>.labels.json` sidecar when present.
// Degenerate triangles (repeated indices or exactly zero area) are dropped;
// the count is reported through `degenerate_dropped` when non-null.
// Throws ParseError / LabelMismatch / IOError.
TriangleMesh load_mesh(const std::string& path, MeshFormat format,
                       int* degenerate_dropped = nullptr);

// Saves a mesh. PLY carries normals as nx/ny/nz and labels as an int
// property `label`; OBJ writes v/vn/f plus the labels sidecar when the mesh
// has labels. Binary PLY uses double-precision properties so a save/load
// round trip is exact.
void save_mesh(const TriangleMesh& mesh, const std::string& path, MeshFormat format,
               PlyEncoding encoding = PlyEncoding::BinaryLittleEndian);

// Writes a PLY with per-vertex uchar red/green/blue added.
void save_ply_with_colors(const TriangleMesh& mesh,
                          const std::vector<std::array<unsigned char, 3>>& colors,
                          const std::string& path,
                          PlyEncoding encoding = PlyEncoding::BinaryLittleEndian);

// Sidecar path used for OBJ labels: replaces the extension with
// ".labels.json" (e.g. scan.obj -> scan.labels.json).
std::string labels_sidecar_path(const std::string& mesh_path);

}  // namespace dentkit
