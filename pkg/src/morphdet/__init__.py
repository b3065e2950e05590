"""Face morphing detection workbench.

End-to-end tooling for studying how face alignment (the amount of image
context kept around the face) affects single-image morphing attack
detection: template-based alignment, landmark morph generation, fused and
binary detector training, APCER/BPCER benchmarking, and Grad-CAM based
context analysis.
"""

__version__ = "0.1.0"
