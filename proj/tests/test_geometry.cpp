#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "fixtures.hpp"
#include "reorient/mesh_io.hpp"

using namespace reorient;
using fixtures::random_pose;

namespace {

TriMesh from_points(const std::vector<Vec3>& pts) {
  TriMesh m;
  m.vertices = pts;
  return m;
}

bool same_facet_set(const ConvexHull& hull, const std::vector<oracle::Plane>& planes) {
  if (hull.facets.size() != planes.size()) return false;
  for (const auto& f : hull.facets) {
    bool found = false;
    for (const auto& p : planes)
      if (f.normal.dot(p.n) > 1 - 1e-9 && std::abs(f.offset - p.d) < 1e-9) found = true;
    if (!found) return false;
  }
  return true;
}

}  // namespace

// ---------------------------------------------------------------------------
// Poses

TEST(Pose, IdentityLeavesPointsAlone) {
  EXPECT_EQ(transform_point(Pose{}, Vec3(1, 2, 3)), Vec3(1, 2, 3));
}

TEST(Pose, QuarterTurnAboutZ) {
  const Vec3 y = transform_point({Vec3::Zero(), rot_z(kPi / 2)}, Vec3(1, 0, 0));
  EXPECT_LT((y - Vec3(0, 1, 0)).norm(), 1e-12);
}

TEST(Pose, InverseRoundTrip) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 100; ++i) {
    const Pose t = random_pose(rng);
    const Vec3 x = 3 * random_pose(rng).position;
    EXPECT_LT((transform_point(t.inverse(), transform_point(t, x)) - x).norm(), 1e-10);
  }
}

TEST(Pose, CompositionIsAssociative) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 100; ++i) {
    const Pose a = random_pose(rng), b = random_pose(rng), c = random_pose(rng);
    const Pose l = (a * b) * c, r = a * (b * c);
    EXPECT_LT((l.position - r.position).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((l.rotation - r.rotation).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((transform_pose(a, b).position - (a * b).position).norm(), 1e-15);
  }
}

TEST(Pose, ValidityChecksOrthonormalityAndHandedness) {
  std::mt19937_64 rng(3);
  EXPECT_TRUE(random_pose(rng).is_valid());
  Pose reflected;
  reflected.rotation = Vec3(1, 1, -1).asDiagonal();
  EXPECT_FALSE(reflected.is_valid());
  Pose skewed;
  skewed.rotation(0, 1) = 1e-6;
  EXPECT_FALSE(skewed.is_valid());
}

TEST(Pose, RotationBetweenHandlesOppositeVectors) {
  for (const Vec3& from : {Vec3(0, 0, 1), Vec3(1, 0, 0), Vec3(0.3, -0.4, 0.5).normalized()}) {
    for (const Vec3& to : {Vec3(from), Vec3(-from), Vec3(0, 0, -1)}) {
      const Mat3 r = rotation_between(from, to);
      EXPECT_LT((r * from - to).norm(), 1e-12);
      EXPECT_TRUE((Pose{Vec3::Zero(), r}).is_valid());
    }
  }
}

// ---------------------------------------------------------------------------
// Meshes and mass properties

TEST(TriMesh, BuildersAreWatertightWithOutwardWinding) {
  const std::vector<TriMesh> meshes = {make_box(Vec3::Zero(), Vec3::Ones()), make_regular_tetrahedron(0.1),
                                       make_l_block(0.06, 0.03, 0.03), make_cylinder(0.02, 0.05, 16)};
  for (const auto& m : meshes) {
    EXPECT_TRUE(m.indices_in_range());
    EXPECT_TRUE(m.is_watertight());
    EXPECT_GT(signed_volume(m), 0);
  }
}

TEST(TriMesh, DetectsOpenMesh) {
  TriMesh m = make_box(Vec3::Zero(), Vec3::Ones());
  m.triangles.pop_back();
  EXPECT_FALSE(m.is_watertight());
  EXPECT_THROW(
      {
        try {
          center_of_mass(m);
        } catch (const Error& e) {
          EXPECT_EQ(e.code(), ErrorCode::NonWatertight);
          throw;
        }
      },
      Error);
}

TEST(CenterOfMass, UnitCube) {
  EXPECT_LT((center_of_mass(make_box(Vec3::Zero(), Vec3::Ones())) - Vec3(0.5, 0.5, 0.5)).norm(), 1e-12);
}

TEST(CenterOfMass, TranslatedCube) {
  const TriMesh m = make_box(Vec3::Zero(), Vec3::Ones()).transformed(Pose::from_translation({2, 0, 0}));
  EXPECT_LT((center_of_mass(m) - Vec3(2.5, 0.5, 0.5)).norm(), 1e-12);
}

TEST(CenterOfMass, TwoCubeBarMatchesVoxels) {
  const std::vector<Vec2> bar = {{0, 0}, {2, 0}, {2, 1}, {0, 1}};
  const Vec3 voxel = oracle::prism_com_voxel(bar, 1.0, 1e-3);
  EXPECT_LT((center_of_mass(make_prism(bar, 1.0)) - voxel).norm(), 1e-4);
}

TEST(CenterOfMass, LShapedPrismMatchesVoxels) {
  const std::vector<Vec2> ell = {{0, 0}, {2, 0}, {2, 1}, {1, 1}, {1, 2}, {0, 2}};
  const Vec3 voxel = oracle::prism_com_voxel(ell, 1.0, 1e-3);
  EXPECT_LT((center_of_mass(make_l_block(2, 1, 1)) - voxel).norm(), 1e-4);
  EXPECT_LT((center_of_mass(make_prism(ell, 1.0)) - Vec3(5.0 / 6, 5.0 / 6, 0.5)).norm(), 1e-12);
}

TEST(CenterOfMass, SlantedPrismMatchesVoxels) {
  const std::vector<Vec2> poly = {{0, 0}, {1.3, 0.2}, {1.1, 0.9}, {0.4, 1.4}, {-0.2, 0.7}};
  const Vec3 voxel = oracle::prism_com_voxel(poly, 0.5, 1e-3);
  EXPECT_LT((center_of_mass(make_prism(poly, 0.5)) - voxel).norm(), 1e-4);
}

TEST(CenterOfMass, EquivariantUnderRigidMotion) {
  std::mt19937_64 rng(4);
  const TriMesh m = make_l_block(0.06, 0.03, 0.03);
  const Vec3 c = center_of_mass(m);
  for (int i = 0; i < 20; ++i) {
    const Pose t = random_pose(rng);
    EXPECT_LT((center_of_mass(m.transformed(t)) - t.apply(c)).norm(), 1e-10);
  }
}

TEST(CenterOfMass, AgreesWithIndependentFan) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 5; ++i) {
    const ConvexHull h = convex_hull(fixtures::random_convex_points(rng, 40));
    EXPECT_LT((center_of_mass(h.hull) - oracle::center_of_mass(h.hull)).norm(), 1e-12);
  }
}

TEST(Raycast, HitsNearestFace) {
  const TriMesh m = make_box(Vec3::Zero(), Vec3::Ones());
  const auto hit = raycast(m, Vec3(0.5, 0.5, -1), Vec3::UnitZ());
  ASSERT_TRUE(hit);
  EXPECT_NEAR(hit->t, 1.0, 1e-12);
  EXPECT_FALSE(raycast(m, Vec3(2, 2, -1), Vec3::UnitZ()));
  EXPECT_TRUE(point_in_mesh(m, Vec3(0.3, 0.6, 0.2)));
  EXPECT_FALSE(point_in_mesh(m, Vec3(1.3, 0.6, 0.2)));
  EXPECT_NEAR(distance_to_mesh(m, Vec3(0.5, 0.5, 1.25)), 0.25, 1e-12);
}

// ---------------------------------------------------------------------------
// Convex hull

TEST(ConvexHull, TetrahedronIsItsOwnHull) {
  const TriMesh tet = make_regular_tetrahedron(0.1);
  const ConvexHull h = convex_hull(tet);
  EXPECT_EQ(h.facets.size(), 4u);
  EXPECT_EQ(h.hull.vertices.size(), 4u);
  for (const auto& v : tet.vertices) {
    bool present = false;
    for (const auto& w : h.hull.vertices) present |= (v - w).norm() < 1e-15;
    EXPECT_TRUE(present);
  }
  EXPECT_TRUE(h.hull.is_watertight());
  EXPECT_NEAR(signed_volume(h.hull), signed_volume(tet), 1e-15);
}

TEST(ConvexHull, CubeWithInteriorPoint) {
  std::vector<Vec3> pts = make_box(Vec3::Zero(), Vec3::Ones()).vertices;
  pts.emplace_back(0.5, 0.5, 0.5);
  const ConvexHull h = convex_hull(pts);
  EXPECT_EQ(h.facets.size(), 6u);
  for (const auto& v : h.hull.vertices) EXPECT_GT((v - Vec3(0.5, 0.5, 0.5)).norm(), 0.1);
  for (const auto& f : h.facets) {
    EXPECT_EQ(f.polygon.size(), 4u);
    EXPECT_NEAR(f.area(), 1.0, 1e-12);
  }
}

TEST(ConvexHull, RandomBallContainsEveryPoint) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<Vec3> pts;
  while (pts.size() < 100) {
    const Vec3 p(u(rng), u(rng), u(rng));
    if (p.norm() <= 1) pts.push_back(p);
  }
  const ConvexHull h = convex_hull(pts);
  for (const auto& f : h.facets) {
    EXPECT_NEAR(f.normal.norm(), 1.0, 1e-9);
    for (const auto& p : pts) EXPECT_LE(f.signed_distance(p), 1e-9);
  }
  EXPECT_TRUE(h.hull.is_watertight());
}

TEST(ConvexHull, MatchesBruteForceFacets) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 5; ++trial) {
    const auto pts = fixtures::random_convex_points(rng, 20 + 10 * trial);
    EXPECT_TRUE(same_facet_set(convex_hull(pts), oracle::brute_force_facets(pts))) << "trial " << trial;
  }
  const auto cube = make_box(Vec3::Zero(), Vec3::Ones()).vertices;
  EXPECT_TRUE(same_facet_set(convex_hull(cube), oracle::brute_force_facets(cube)));
  const auto ell = make_l_block(0.06, 0.03, 0.03).vertices;
  EXPECT_TRUE(same_facet_set(convex_hull(ell), oracle::brute_force_facets(ell)));
}

TEST(ConvexHull, Idempotent) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 5; ++trial) {
    const ConvexHull a = convex_hull(fixtures::random_convex_points(rng, 50));
    const ConvexHull b = convex_hull(a.hull);
    ASSERT_EQ(a.facets.size(), b.facets.size());
    for (const auto& f : a.facets) {
      bool found = false;
      for (const auto& g : b.facets)
        found |= (f.normal - g.normal).norm() < 1e-9 && std::abs(f.offset - g.offset) < 1e-9;
      EXPECT_TRUE(found);
    }
  }
}

TEST(ConvexHull, MergesCoplanarTrianglesAndOrdersBoundary) {
  const ConvexHull h = convex_hull(make_l_block(0.06, 0.03, 0.03));
  // The notch is concave, so the hull of the L is a pentagonal prism.
  EXPECT_EQ(h.facets.size(), 7u);
  for (const auto& f : h.facets) {
    Vec3 area_vec = Vec3::Zero();
    for (std::size_t i = 0; i < f.polygon.size(); ++i)
      area_vec += f.polygon[i].cross(f.polygon[(i + 1) % f.polygon.size()]);
    EXPECT_GT(area_vec.dot(f.normal), 0) << "boundary must run counter-clockwise seen from outside";
  }
}

TEST(ConvexHull, RejectsDegenerateInput) {
  auto code_of = [](const std::vector<Vec3>& pts) {
    try {
      convex_hull(pts);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::Io;
  };
  EXPECT_EQ(code_of({Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)}), ErrorCode::DegenerateMesh);
  EXPECT_EQ(code_of({Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(1, 1, 0), Vec3(0.3, 0.2, 0)}),
            ErrorCode::DegenerateMesh);
  EXPECT_EQ(code_of({Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(2, 0, 0), Vec3(3, 0, 0)}), ErrorCode::DegenerateMesh);
  EXPECT_EQ(code_of(from_points({Vec3::Zero(), Vec3::Zero(), Vec3::Zero(), Vec3::Zero()}).vertices),
            ErrorCode::DegenerateMesh);
}

// ---------------------------------------------------------------------------
// Mesh files

TEST(MeshIo, ObjWithTextureAndNormalIndices) {
  std::istringstream in(
      "# tetra\nv 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 0 1\nvt 0 0\nvn 0 0 1\n"
      "f 1/1/1 3/1/1 2/1/1\nf 1//1 2//1 4//1\nf 1 4 3\nf 2 3 4\n");
  const TriMesh m = parse_obj(in);
  EXPECT_EQ(m.vertices.size(), 4u);
  EXPECT_EQ(m.triangles.size(), 4u);
  EXPECT_TRUE(m.is_watertight());
  EXPECT_NEAR(signed_volume(m), 1.0 / 6, 1e-15);
}

TEST(MeshIo, ObjRejectsPolygonsAndBadIndices) {
  std::istringstream quad("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n");
  EXPECT_THROW(parse_obj(quad), Error);
  std::istringstream range("v 0 0 0\nv 1 0 0\nv 1 1 0\nf 1 2 7\n");
  EXPECT_THROW(parse_obj(range), Error);
}

TEST(MeshIo, StlRoundTripWeldsVertices) {
  const TriMesh box = make_box(Vec3::Zero(), Vec3(0.5, 0.25, 0.125));
  std::stringstream buf;
  write_stl(buf, box);
  EXPECT_EQ(buf.str().size(), 84u + 50u * box.triangles.size());
  const TriMesh back = parse_stl(buf);
  EXPECT_EQ(back.vertices.size(), 8u);
  EXPECT_EQ(back.triangles.size(), 12u);
  EXPECT_TRUE(back.is_watertight());
  EXPECT_NEAR(signed_volume(back), signed_volume(box), 1e-12);
}

TEST(MeshIo, ObjRoundTripAndScale) {
  const TriMesh m = make_l_block(0.06, 0.03, 0.03);
  const auto path = std::filesystem::temp_directory_path() / "reorient_roundtrip.obj";
  write_obj(path, m);
  const TriMesh back = load_mesh(path);
  ASSERT_EQ(back.vertices.size(), m.vertices.size());
  for (std::size_t i = 0; i < m.vertices.size(); ++i) EXPECT_LT((back.vertices[i] - m.vertices[i]).norm(), 1e-12);
  EXPECT_EQ(back.triangles, m.triangles);
  const TriMesh mm = load_mesh(path, 1000.0);
  EXPECT_NEAR(mm.bounds().second.x(), 60.0, 1e-9);
  std::filesystem::remove(path);
}

TEST(MeshIo, MissingFileNamesThePath) {
  try {
    load_mesh("/nonexistent/dir/part.obj");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Io);
    EXPECT_NE(std::string(e.what()).find("/nonexistent/dir/part.obj"), std::string::npos);
  }
}

// ---------------------------------------------------------------------------
// Collision primitives

TEST(Collision, BoxTriangleBasics) {
  const OrientedBox box{Pose{}, Vec3(0.5, 0.5, 0.5)};
  EXPECT_TRUE(box_triangle_overlap(box, {Vec3(-1, -1, 0), Vec3(1, -1, 0), Vec3(0, 1, 0)}));
  EXPECT_FALSE(box_triangle_overlap(box, {Vec3(-1, -1, 0.6), Vec3(1, -1, 0.6), Vec3(0, 1, 0.6)}));
  // Flush contact is not a collision.
  EXPECT_FALSE(box_triangle_overlap(box, {Vec3(-1, -1, 0.5), Vec3(1, -1, 0.5), Vec3(0, 1, 0.5)}));
  // Separated only along an edge-edge cross axis.
  const Triangle skew{Vec3(1.1, 0, 0), Vec3(0, 1.1, 0), Vec3(1.5, 1.5, 0.3)};
  EXPECT_FALSE(box_triangle_overlap(box, skew));
  const Vec3 in(-0.2, -0.2, 0);
  EXPECT_TRUE(box_triangle_overlap(box, {skew.a + in, skew.b + in, skew.c + in}));
}

TEST(Collision, BoxTriangleAgreesWithEdgeCrossingOracle) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-1, 1);
  int hits = 0, checked = 0;
  for (int i = 0; i < 4000; ++i) {
    const Pose frame = random_pose(rng, 0.3);
    const Vec3 half(0.2 + 0.3 * std::abs(u(rng)), 0.2 + 0.3 * std::abs(u(rng)), 0.2 + 0.3 * std::abs(u(rng)));
    const OrientedBox box{frame, half};
    const Triangle tri{Vec3(u(rng), u(rng), u(rng)), Vec3(u(rng), u(rng), u(rng)), Vec3(u(rng), u(rng), u(rng))};
    const bool inner = oracle::box_hits_triangle(oracle::shrunk(box, 1e-5), tri.a, tri.b, tri.c);
    const bool outer = oracle::box_hits_triangle(oracle::shrunk(box, -1e-5), tri.a, tri.b, tri.c);
    if (inner != outer) continue;  // within the contact band
    ++checked;
    hits += inner;
    EXPECT_EQ(box_triangle_overlap(box, tri), inner) << "case " << i;
  }
  EXPECT_GT(checked, 3900);
  EXPECT_GT(hits, 500);
  EXPECT_LT(hits, checked - 500);
}

TEST(Collision, BoxInsideMeshCounts) {
  const TriMesh big = make_centered_box(Vec3::Constant(1.0));
  EXPECT_TRUE(box_mesh_intersect({Pose{}, Vec3::Constant(0.1)}, big));
  EXPECT_FALSE(box_mesh_intersect({Pose::from_translation({2, 0, 0}), Vec3::Constant(0.1)}, big));
}

TEST(Collision, CapsuleAgainstMeshAndPlane) {
  const TriMesh box = make_centered_box(Vec3::Constant(1.0));
  EXPECT_TRUE(capsule_mesh_intersect({Vec3(0.7, -1, 0), Vec3(0.7, 1, 0), 0.25}, box));
  EXPECT_FALSE(capsule_mesh_intersect({Vec3(0.8, -1, 0), Vec3(0.8, 1, 0), 0.25}, box));
  EXPECT_TRUE(capsule_below_plane({Vec3(0, 0, 0.1), Vec3(1, 0, 0.3), 0.15}, 0.0));
  EXPECT_FALSE(capsule_below_plane({Vec3(0, 0, 0.2), Vec3(1, 0, 0.3), 0.15}, 0.0));
  const TriMesh t = tessellate_capsule({Vec3(0, 0, 0), Vec3(0, 0, 1), 0.1}, 16);
  EXPECT_TRUE(t.indices_in_range());
  for (const auto& v : t.vertices) EXPECT_LE(std::abs(Vec2(v.x(), v.y()).norm()), 0.1 + 1e-12);
}

TEST(Collision, SegmentDistance) {
  EXPECT_NEAR(detail::segment_segment_distance(Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 1), Vec3(1, 1, 1)), std::sqrt(2.0),
              1e-12);
  EXPECT_NEAR(detail::segment_segment_distance(Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0.5, -1, 0.3), Vec3(0.5, 1, 0.3)), 0.3,
              1e-12);
  EXPECT_NEAR(segment_triangle_distance(Vec3(0.2, 0.2, 1), Vec3(0.2, 0.2, 2),
                                        {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)}),
              1.0, 1e-12);
  EXPECT_NEAR(segment_triangle_distance(Vec3(0.2, 0.2, -1), Vec3(0.2, 0.2, 2),
                                        {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)}),
              0.0, 1e-12);
}
