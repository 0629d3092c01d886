import os
from dataclasses import dataclass

from config import BaseArgs
from open_systems import channels, gksl
from open_systems.linalg import matrix_to_json
from open_systems.states import LOWERING, SIGMA_Z, bell_state, ket, maximally_mixed, product_state, project
from utils import write_json


@dataclass
class ExampleArgs(BaseArgs):
    output_folder: str = "inputs"
    damping: float = 0.3
    gamma: float = 0.5


def amplitude_damping_generator(gamma: float) -> gksl.GKSLGenerator:
    return gksl.GKSLGenerator(2, SIGMA_Z, ((LOWERING, gamma),))


def write_examples(args: ExampleArgs) -> None:
    os.makedirs(args.output_folder, exist_ok=True)
    path = lambda name: os.path.join(args.output_folder, name)

    amp_damp = channels.kraus_from_choi(channels.amplitude_damping(args.damping))
    write_json(channels.kraus_to_json(amp_damp), path("amp_damp_channel.json"))
    write_json({"dim": 2, "choi": matrix_to_json(channels.transpose_choi(2))}, path("bad_choi.json"))
    write_json(matrix_to_json(project(bell_state()).matrix), path("bell_state.json"))
    write_json(matrix_to_json(product_state(project(ket(2, 0)), maximally_mixed(2)).matrix), path("product_state.json"))
    write_json(matrix_to_json(project(ket(2, 1)).matrix), path("excited.json"))

    generator = amplitude_damping_generator(args.gamma)
    write_json(gksl.generator_to_json(generator), path("amp_damp_generator.json"))
    write_json(gksl.superop_to_json(gksl.superop_from_generator(generator)), path("amp_damp.json"))
    transpose_map = gksl.Superoperator.from_map(lambda X: X.mT - X, 2)
    write_json(gksl.superop_to_json(transpose_map), path("transpose_generator.json"))
    print(f"Wrote example inputs to {args.output_folder}")


if __name__ == "__main__":
    write_examples(ExampleArgs.parse_args())
