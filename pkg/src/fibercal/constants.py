#: Names of the photodiode channels in frame order. PD1-PD4 read the U-shaped fibers
#: of the upper layer, PD5-PD6 the straight fibers of the lower layer and PD7 the
#: leakage photodiode at the bottom of the elastomer.
CHANNEL_NAMES = ("PD1", "PD2", "PD3", "PD4", "PD5", "PD6", "PD7")

#: Number of photodiode channels of one intensity frame.
NUMBER_OF_CHANNELS = len(CHANNEL_NAMES)

#: Frame indices of the six fiber channels (upper and lower layer).
FIBER_CHANNELS = (0, 1, 2, 3, 4, 5)

#: Frame indices of the upper-layer fiber channels.
UPPER_CHANNELS = (0, 1, 2, 3)

#: Frame indices of the channels used to recover the indentation state: the two
#: lower-layer fibers and the bottom photodiode.
LOWER_CHANNELS = (4, 5, 6)

#: Names of the indentation factors in the order they are stacked into matrices.
INDENTATION_FACTORS = ("depth", "radius")

#: Names of the force axes in the order they are stacked into matrices.
FORCE_AXES = ("fx", "fy", "fz")

#: Relative singular value cutoff of the pseudoinverse.
PSEUDOINVERSE_RCOND = 1e-12

#: Relative cutoff below which a centered regressor matrix counts as rank deficient.
EXCITATION_RCOND = 1e-9

#: Largest response of a fiber to the load components it is insensitive to, relative
#: to the largest response of the ground truth matrix.
ANISOTROPY_RATIO = 0.05

#: Platform travel of the indentation phase, in mm.
DEFAULT_DEPTH_STOP_MM = 5.0

#: Step of the indentation grid, in mm.
DEFAULT_DEPTH_STEP_MM = 1.0

#: Diameters of the cylindrical indenters, in mm.
DEFAULT_DIAMETERS_MM = (5.0, 7.5, 10.0, 12.0)

#: Lateral platform travel in each direction of the shear phase, in mm.
DEFAULT_SHEAR_STOP_MM = 4.0

#: Step of the lateral grid, in mm.
DEFAULT_SHEAR_STEP_MM = 1.0

#: Indentation depths at which the shear phase is recorded, in mm.
DEFAULT_SHEAR_DEPTHS_MM = (1.0, 2.0, 3.0, 4.0, 5.0)

#: Normal stiffness of the platform surrogate, Fz = kn * depth * radius, in N/mm².
DEFAULT_KN = 0.065

#: Lateral stiffness of the platform surrogate, Fx = ks * dx, in N/mm.
DEFAULT_KS = 0.5

#: Cubic nonlinearity coefficient of the reference noisy sensor.
REFERENCE_GAMMA = 0.3

#: Standard deviation of the additive channel noise of the reference noisy sensor,
#: about 1 % of the full-scale channel magnitude of the default ground truth.
REFERENCE_NOISE_SIGMA = 0.003

#: Seed of the PRNG stream used when none is configured.
DEFAULT_SEED = 0

#: Depth range covered by generated datasets, in mm.
GENERATED_DEPTH_RANGE_MM = (0.0, 5.0)

#: Radius range covered by generated datasets, in mm.
GENERATED_RADIUS_RANGE_MM = (2.5, 6.0)

#: Magnitude bound of each force component of generated datasets, in N.
GENERATED_FORCE_LIMIT_N = 2.0

#: Below this recovered depth the radius estimate is flagged as unreliable, in mm.
UNRELIABLE_RADIUS_DEPTH_MM = 0.1

#: Flag raised when a negative recovered depth was clamped to zero.
FLAG_CLAMPED_DEPTH = "clamped_depth"

#: Flag raised when the radius was recovered at (almost) no contact.
FLAG_UNRELIABLE_RADIUS = "unreliable_radius"

#: Number of rest frames averaged into a baseline by default.
DEFAULT_BASELINE_WINDOW = 50

#: Version of the calibration model file format written by this package.
MODEL_FORMAT_VERSION = 1

#: Length unit of depths, radii and diameters.
LENGTH_UNIT = "mm"

#: Force unit.
FORCE_UNIT = "N"

#: printf-style format writing floats to dataset files without precision loss.
DATASET_FLOAT_FORMAT = "%.17g"

#: Number of decimals of numeric fields in stream output.
STREAM_DECIMALS = 6

#: Separator between the flags of one stream output line.
FLAGS_SEPARATOR = "|"

#: Prefix of the stream output line answering a malformed input line.
STREAM_ERROR_PREFIX = "ERR"

#: Host the streaming server binds to.
DEFAULT_SERVE_HOST = "127.0.0.1"

#: Process exit code on success.
EXIT_OK = 0

#: Process exit code on schema, parse or configuration errors.
EXIT_CONFIGURATION_ERROR = 2

#: Process exit code when calibration data does not excite all factors.
EXIT_IDENTIFIABILITY_ERROR = 3

#: Process exit code on file system errors.
EXIT_IO_ERROR = 4
