// Orthographic world<->screen mapping with manual yaw/pitch rotation for
// 3D scenes. Pointer picking maps the cursor onto the world z=0 plane;
// the server resolves depth by grabbing the nearest particle.

export interface Vec3 {
  x: number;
  y: number;
  z: number;
}

export interface Viewport {
  width: number;
  height: number;
  /** world units shown across the smaller viewport axis */
  extent: number;
}

export class Camera {
  yaw = 0; // radians about the world Y axis
  pitch = 0; // radians about the camera X axis

  /** Rotation applied to world points before the orthographic drop. */
  rotate(p: Vec3): Vec3 {
    const cy = Math.cos(this.yaw);
    const sy = Math.sin(this.yaw);
    const cx = Math.cos(this.pitch);
    const sx = Math.sin(this.pitch);
    // yaw about Y
    const x1 = cy * p.x + sy * p.z;
    const z1 = -sy * p.x + cy * p.z;
    // pitch about X
    const y2 = cx * p.y - sx * z1;
    const z2 = sx * p.y + cx * z1;
    return { x: x1, y: y2, z: z2 };
  }

  toScreen(p: Vec3, view: Viewport): { x: number; y: number; depth: number } {
    const r = this.rotate(p);
    const scale = Math.min(view.width, view.height) / view.extent;
    return {
      x: view.width / 2 + r.x * scale,
      y: view.height / 2 - r.y * scale,
      depth: r.z,
    };
  }

  /**
   * Inverse mapping of a screen point onto the world plane z = 0.
   * Returns null when the plane is edge-on (degenerate at |pitch| or
   * |yaw| near 90 degrees).
   */
  toWorldOnZPlane(sx: number, sy: number, view: Viewport): Vec3 | null {
    const scale = Math.min(view.width, view.height) / view.extent;
    const vx = (sx - view.width / 2) / scale;
    const vy = -(sy - view.height / 2) / scale;
    // With z = 0: vx = cy*wx, vy = cx*wy - sx*(-sy*wx) = cx*wy + sx*sy*wx
    const cy = Math.cos(this.yaw);
    const sy_ = Math.sin(this.yaw);
    const cx = Math.cos(this.pitch);
    const sx_ = Math.sin(this.pitch);
    const a11 = cy;
    const a12 = 0;
    const a21 = sx_ * sy_;
    const a22 = cx;
    const det = a11 * a22 - a12 * a21;
    if (Math.abs(det) < 1e-6) return null;
    const wx = (vx * a22 - a12 * vy) / det;
    const wy = (a11 * vy - a21 * vx) / det;
    return { x: wx, y: wy, z: 0 };
  }
}
