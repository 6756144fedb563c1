 public class ComputeArea { public static void main(String[] args)   { double radius = Console.readDouble();    double area = radius * radius * Math.PI; System.out.println("Area:\t" + area); } } 