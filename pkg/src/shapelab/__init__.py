"""shapelab: surfaces and hypersurfaces that keep their shape operator under deformation.

Modules
-------
expr      closed-form scalar expressions (parse, evaluate, differentiate)
metric    diagonal metrics, curvature tests, Codazzi coefficients, pencils
catalog   closed-form examples of deformable surfaces and hyperquadrics
codazzi   the linear system for curvature radii and affine mixes
lame      rotation coefficients, Lax pairs, Darboux system, Goursat solvers
compat    compatibility of hydrodynamic-type Hamiltonian operators
frames    moving frames of the deformed orthogonal nets and the scaling law
surface   reconstruction in E^3, mesh oracle, OBJ export
cli       scene-driven command line front end
"""

__version__ = "0.1.0"
